#pragma once

#include "halfspace/error.hpp"
#include "halfspace/grid_field.hpp"
#include "halfspace/symbols.hpp"
#include "halfspace/coefficients.hpp"
#include "halfspace/krylov.hpp"
#include "halfspace/parallel.hpp"
#include "halfspace/first_order.hpp"
#include "halfspace/holomorphic.hpp"
#include "halfspace/calculus.hpp"
#include "halfspace/tent.hpp"
#include "halfspace/bvp.hpp"
#include "halfspace/random.hpp"
