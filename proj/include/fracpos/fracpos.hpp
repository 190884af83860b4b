#ifndef FRACPOS_FRACPOS_HPP
#define FRACPOS_FRACPOS_HPP

#include "fracpos/errors.hpp"
#include "fracpos/linalg.hpp"
#include "fracpos/mesh.hpp"
#include "fracpos/mesh_io.hpp"
#include "fracpos/fem.hpp"
#include "fracpos/quadrature.hpp"
#include "fracpos/kernel.hpp"
#include "fracpos/threshold.hpp"
#include "fracpos/semidiscrete.hpp"
#include "fracpos/fullydiscrete.hpp"

namespace fracpos {
inline constexpr const char* kVersion = "0.1.0";
}

#endif  // FRACPOS_FRACPOS_HPP
