#pragma once

#include "xindep/accumulate.hpp"
#include "xindep/core_data.hpp"
#include "xindep/csv.hpp"
#include "xindep/errors.hpp"
#include "xindep/fast_xhsic.hpp"
#include "xindep/kernels.hpp"
#include "xindep/parallel.hpp"
#include "xindep/reference.hpp"
#include "xindep/rng.hpp"
#include "xindep/simlab.hpp"
#include "xindep/testing.hpp"
