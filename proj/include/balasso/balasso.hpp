#pragma once

#include "balasso/baselines.hpp"
#include "balasso/chain.hpp"
#include "balasso/dataset.hpp"
#include "balasso/distributions.hpp"
#include "balasso/error.hpp"
#include "balasso/gibbs_general.hpp"
#include "balasso/gibbs_linear.hpp"
#include "balasso/groups.hpp"
#include "balasso/harness.hpp"
#include "balasso/inference.hpp"
#include "balasso/keyvalue.hpp"
#include "balasso/persistence.hpp"
#include "balasso/rng.hpp"
#include "balasso/wlasso.hpp"
