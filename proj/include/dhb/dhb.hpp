#pragma once

#include "dhb/bachelier.hpp"
#include "dhb/config.hpp"
#include "dhb/curve.hpp"
#include "dhb/evaluate.hpp"
#include "dhb/hedge/features.hpp"
#include "dhb/hedge/model.hpp"
#include "dhb/hedge/panel.hpp"
#include "dhb/hedge/policy.hpp"
#include "dhb/hedge/strategy.hpp"
#include "dhb/hedge/train.hpp"
#include "dhb/nn/adam.hpp"
#include "dhb/nn/cvar.hpp"
#include "dhb/nn/mlp.hpp"
#include "dhb/reference.hpp"
#include "dhb/scenario_io.hpp"
#include "dhb/smbm.hpp"
#include "dhb/swaption.hpp"
