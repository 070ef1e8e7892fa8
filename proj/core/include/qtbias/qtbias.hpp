// qtbias.hpp — umbrella header.

#pragma once

#include "qtbias/bias.hpp"
#include "qtbias/cmatrix.hpp"
#include "qtbias/collapse.hpp"
#include "qtbias/collision.hpp"
#include "qtbias/config.hpp"
#include "qtbias/dynamics.hpp"
#include "qtbias/errors.hpp"
#include "qtbias/experiment.hpp"
#include "qtbias/optimize.hpp"
#include "qtbias/parallel.hpp"
#include "qtbias/qmath.hpp"
#include "qtbias/rng.hpp"
#include "qtbias/trajectory.hpp"
