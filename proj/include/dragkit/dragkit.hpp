#pragma once

#include "linalg.hpp"
#include "pulse_shapes.hpp"
#include "hamiltonians.hpp"
#include "propagator.hpp"
#include "superadiabatic.hpp"
#include "drag_synthesis.hpp"
#include "calibration.hpp"
#include "scenarios.hpp"
#include "io.hpp"
