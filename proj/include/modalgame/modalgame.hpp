#pragma once

#include "modalgame/choice.hpp"
#include "modalgame/core_model.hpp"
#include "modalgame/equilibrium.hpp"
#include "modalgame/equity.hpp"
#include "modalgame/error.hpp"
#include "modalgame/optim.hpp"
#include "modalgame/parallel.hpp"
#include "modalgame/scenario.hpp"
#include "modalgame/scenario_io.hpp"
#include "modalgame/strategy.hpp"
#include "modalgame/sweep.hpp"
#include "modalgame/tnc_operator.hpp"
#include "modalgame/transit_operator.hpp"
