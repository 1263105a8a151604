#pragma once

#include "amoeba.hpp"
#include "cplx_linalg.hpp"
#include "error.hpp"
#include "gauss_map.hpp"
#include "laurent_poly.hpp"
#include "parallel.hpp"
#include "variety.hpp"
