#pragma once

#include "acir/model.hpp"
#include "acir/rng.hpp"
#include "acir/drivers.hpp"
#include "acir/scheme.hpp"
#include "acir/experiments.hpp"
#include "acir/config.hpp"
#include "acir/svg.hpp"
#include "acir/commands.hpp"
