#pragma once

#include "palcurv/error.hpp"
#include "palcurv/numerics.hpp"
#include "palcurv/surface.hpp"
#include "palcurv/curvature_lines.hpp"
#include "palcurv/compatibility.hpp"
#include "palcurv/io.hpp"
