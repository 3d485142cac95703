#pragma once

#include "rfield/dual.hpp"
#include "rfield/errors.hpp"
#include "rfield/field.hpp"
#include "rfield/io.hpp"
#include "rfield/morph.hpp"
#include "rfield/primitives.hpp"
#include "rfield/rfunctions.hpp"
#include "rfield/shapelang.hpp"
#include "rfield/sim.hpp"
#include "rfield/tolerances.hpp"
#include "rfield/vec.hpp"
