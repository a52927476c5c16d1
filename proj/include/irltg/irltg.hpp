#pragma once

// Convenience umbrella: the whole library in one include.

#include "irltg/adam.hpp"
#include "irltg/checkpoint.hpp"
#include "irltg/corpus.hpp"
#include "irltg/errors.hpp"
#include "irltg/finite_diff.hpp"
#include "irltg/irl_trainer.hpp"
#include "irltg/lstm.hpp"
#include "irltg/mat.hpp"
#include "irltg/metrics.hpp"
#include "irltg/oracle.hpp"
#include "irltg/parallel.hpp"
#include "irltg/policy_net.hpp"
#include "irltg/reward_net.hpp"
#include "irltg/rng.hpp"
#include "irltg/run_config.hpp"
