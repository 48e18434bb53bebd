#pragma once

#include "aptsim/acoustic.hpp"
#include "aptsim/config.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/layer.hpp"
#include "aptsim/linalg.hpp"
#include "aptsim/mason.hpp"
#include "aptsim/netlist.hpp"
#include "aptsim/network.hpp"
#include "aptsim/optimizer.hpp"
#include "aptsim/solver.hpp"
#include "aptsim/stack.hpp"
#include "aptsim/sweep.hpp"
