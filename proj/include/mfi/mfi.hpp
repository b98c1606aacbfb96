#pragma once

#include "mfi/core.hpp"
#include "mfi/qp.hpp"
#include "mfi/convex_geometry.hpp"
#include "mfi/monotone_operators.hpp"
#include "mfi/cusco_maps.hpp"
#include "mfi/integrator.hpp"
#include "mfi/invariance.hpp"
#include "mfi/lyapunov.hpp"
#include "mfi/scenario.hpp"
#include "mfi/cli.hpp"
