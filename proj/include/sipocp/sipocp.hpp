#pragma once

/**
 * @file
 * @brief Umbrella header for the sipocp library.
 */

#include "annealing.hpp"
#include "basis.hpp"
#include "benchmarks.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "expm.hpp"
#include "lqr.hpp"
#include "mpc.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "problem.hpp"
#include "problem_file.hpp"
#include "qp.hpp"
#include "quadrature.hpp"
#include "report.hpp"
#include "transcription.hpp"
#include "validate.hpp"
#include "verify.hpp"
