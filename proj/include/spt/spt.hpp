#pragma once

#include "spt/corelang.hpp"
#include "spt/distance.hpp"
#include "spt/error.hpp"
#include "spt/miner.hpp"
#include "spt/optimize.hpp"
#include "spt/petrinet.hpp"
#include "spt/random.hpp"
#include "spt/semantics.hpp"
#include "spt/tree.hpp"
