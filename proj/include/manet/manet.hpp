#pragma once

// Umbrella header for the manet library: multiple-allocation Bernoulli
// mixture models for binary actor-event networks, with Gibbs inference, DIC
// model selection, clustering diagnostics, a flat-mixture comparator, and a
// simulation harness.

#include "manet/baseline.hpp"
#include "manet/data.hpp"
#include "manet/diagnostics.hpp"
#include "manet/error.hpp"
#include "manet/experiments.hpp"
#include "manet/io.hpp"
#include "manet/matrix.hpp"
#include "manet/membership.hpp"
#include "manet/model.hpp"
#include "manet/rng.hpp"
#include "manet/sampler.hpp"
#include "manet/selection.hpp"
#include "manet/simgen.hpp"
#include "manet/version.hpp"
