#ifndef FEDSIM_FEDSIM_HPP
#define FEDSIM_FEDSIM_HPP

#include "fedsim/aggregate.hpp"
#include "fedsim/data.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/error.hpp"
#include "fedsim/grid.hpp"
#include "fedsim/model.hpp"
#include "fedsim/params.hpp"
#include "fedsim/random.hpp"
#include "fedsim/stats.hpp"
#include "fedsim/threat.hpp"

#endif
