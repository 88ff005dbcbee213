#pragma once

// Umbrella header.

#include "ssrnn/checkpoint.hpp"
#include "ssrnn/evaluation.hpp"
#include "ssrnn/gradients.hpp"
#include "ssrnn/model.hpp"
#include "ssrnn/numeric.hpp"
#include "ssrnn/policy.hpp"
#include "ssrnn/rng.hpp"
#include "ssrnn/tasks.hpp"
#include "ssrnn/training.hpp"
