#pragma once

// Umbrella header for the nnflow library: a periodic-box pseudo-spectral
// solver for the incompressible shear-dependent-viscosity system
//   u_t - div(G[|Du|^2] Du) + (u . grad) u + grad p = 0,  div u = 0,
// together with numerical checkers for the structural inequalities the
// well-posedness theory rests on.

#include "nnf/analysis.hpp"
#include "nnf/common.hpp"
#include "nnf/constitutive.hpp"
#include "nnf/diagnostics.hpp"
#include "nnf/fields.hpp"
#include "nnf/fft.hpp"
#include "nnf/grid.hpp"
#include "nnf/json_io.hpp"
#include "nnf/solver.hpp"
#include "nnf/stress.hpp"
