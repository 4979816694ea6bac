#pragma once

#include "sldg/cli.hpp"
#include "sldg/clipper.hpp"
#include "sldg/dg_field.hpp"
#include "sldg/driver.hpp"
#include "sldg/geometry.hpp"
#include "sldg/mesh.hpp"
#include "sldg/poisson_ldg.hpp"
#include "sldg/problems.hpp"
#include "sldg/quadrature.hpp"
#include "sldg/remap.hpp"
#include "sldg/tracer.hpp"
