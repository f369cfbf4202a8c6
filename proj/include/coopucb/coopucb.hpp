#pragma once

#include "coopucb/agents.hpp"
#include "coopucb/bandit.hpp"
#include "coopucb/config.hpp"
#include "coopucb/error.hpp"
#include "coopucb/graph.hpp"
#include "coopucb/sim.hpp"
#include "coopucb/spectral.hpp"
#include "coopucb/stats.hpp"
