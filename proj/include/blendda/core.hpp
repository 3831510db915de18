#pragma once

#include "blendda/background.hpp"
#include "blendda/constants.hpp"
#include "blendda/eos.hpp"
#include "blendda/errors.hpp"
#include "blendda/grid.hpp"
#include "blendda/state.hpp"
