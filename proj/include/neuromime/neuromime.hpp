#pragma once

#include "neuromime/core/error.hpp"
#include "neuromime/core/image.hpp"
#include "neuromime/core/ode.hpp"
#include "neuromime/core/parallel.hpp"
#include "neuromime/core/rng.hpp"
#include "neuromime/core/series.hpp"
#include "neuromime/devices.hpp"
#include "neuromime/dynamics.hpp"
#include "neuromime/fuzzy.hpp"
#include "neuromime/harness.hpp"
#include "neuromime/io.hpp"
#include "neuromime/reservoir.hpp"
#include "neuromime/security.hpp"
#include "neuromime/synapse.hpp"
