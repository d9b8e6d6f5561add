// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "quadcurl/mesh.hpp"
#include "quadcurl/quadrature.hpp"
#include "quadcurl/basis.hpp"
#include "quadcurl/fe_space.hpp"
#include "quadcurl/assembly.hpp"
#include "quadcurl/block_system.hpp"
#include "quadcurl/linear_solver.hpp"
#include "quadcurl/systems.hpp"
#include "quadcurl/manufactured.hpp"
#include "quadcurl/solve.hpp"
#include "quadcurl/verify.hpp"
