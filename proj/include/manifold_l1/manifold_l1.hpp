#pragma once

#include "manifold_l1/errors.hpp"
#include "manifold_l1/parallel.hpp"
#include "manifold_l1/mesh.hpp"
#include "manifold_l1/mesh_io.hpp"
#include "manifold_l1/operators.hpp"
#include "manifold_l1/l1_norm.hpp"
#include "manifold_l1/sparse_factor.hpp"
#include "manifold_l1/irls.hpp"
#include "manifold_l1/spectral.hpp"
#include "manifold_l1/cmm.hpp"
#include "manifold_l1/mode_io.hpp"
#include "manifold_l1/convergence.hpp"
