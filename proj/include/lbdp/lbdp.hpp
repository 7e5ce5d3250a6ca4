#pragma once

// Linear birth-death processes: simulation, transition likelihoods and
// growth-rate estimation from irregular discrete observations.

#include "bench.hpp"
#include "estimate.hpp"
#include "inhomogeneous.hpp"
#include "io.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "simulate.hpp"
#include "transition.hpp"
#include "types.hpp"
#include "vaf.hpp"
