#pragma once

#include "lordnet/errors.hpp"
#include "lordnet/likelihood.hpp"
#include "lordnet/rng.hpp"
#include "lordnet/parallel.hpp"
#include "lordnet/channel.hpp"
#include "lordnet/unfolded.hpp"
#include "lordnet/adam.hpp"
#include "lordnet/metrics.hpp"
#include "lordnet/training.hpp"
#include "lordnet/baselines.hpp"
#include "lordnet/eval.hpp"
#include "lordnet/checkpoint.hpp"
