#pragma once

#include "itrace/baselines.hpp"
#include "itrace/bench.hpp"
#include "itrace/errors.hpp"
#include "itrace/fds.hpp"
#include "itrace/lanczos.hpp"
#include "itrace/problem.hpp"
#include "itrace/solver.hpp"
#include "itrace/tltr.hpp"
#include "itrace/tridiag.hpp"
