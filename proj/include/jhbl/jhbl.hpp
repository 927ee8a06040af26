#pragma once

#include "jhbl/linear_operator.hpp"
#include "jhbl/fourier.hpp"
#include "jhbl/blur.hpp"
#include "jhbl/tv.hpp"
#include "jhbl/model.hpp"
#include "jhbl/precision.hpp"
#include "jhbl/solver.hpp"
#include "jhbl/uq.hpp"
#include "jhbl/simulate.hpp"
#include "jhbl/metrics.hpp"
#include "jhbl/config.hpp"
#include "jhbl/io.hpp"
