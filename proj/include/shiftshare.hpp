#pragma once

#include "shiftshare/alasso.hpp"
#include "shiftshare/cim.hpp"
#include "shiftshare/csv.hpp"
#include "shiftshare/dataset.hpp"
#include "shiftshare/estimators.hpp"
#include "shiftshare/median_init.hpp"
#include "shiftshare/overid.hpp"
#include "shiftshare/rng.hpp"
#include "shiftshare/simulation.hpp"
