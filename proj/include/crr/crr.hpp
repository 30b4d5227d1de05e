#pragma once

// Umbrella header.

#include "crr/asymptotics.hpp"
#include "crr/bayes.hpp"
#include "crr/conformal.hpp"
#include "crr/dataset.hpp"
#include "crr/errors.hpp"
#include "crr/interval.hpp"
#include "crr/linalg.hpp"
#include "crr/normal.hpp"
#include "crr/rng.hpp"
#include "crr/simulation.hpp"
#include "crr/stats.hpp"
