#pragma once

#include "anycs/core.hpp"
#include "anycs/schedules.hpp"
#include "anycs/ds_sn.hpp"
#include "anycs/catoni.hpp"
#include "anycs/baselines.hpp"
#include "anycs/simlab.hpp"
#include "anycs/format.hpp"
