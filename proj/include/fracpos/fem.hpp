#ifndef FRACPOS_FEM_HPP
#define FRACPOS_FEM_HPP

// Piecewise-linear assembly on a TriMesh. Every assembler works over all
// nodes; the `_full` variants return that matrix, the plain ones restrict it
// to the interior block (Dirichlet elimination).

#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>

#include "fracpos/errors.hpp"
#include "fracpos/linalg.hpp"
#include "fracpos/mesh.hpp"

namespace fracpos {

enum class FemMethod { SG, LM, FVE };

inline std::string_view to_string(FemMethod m) {
  switch (m) {
    case FemMethod::SG: return "SG";
    case FemMethod::LM: return "LM";
    case FemMethod::FVE: return "FVE";
  }
  return "?";
}

inline FemMethod parse_method(std::string_view s) {
  if (s == "SG" || s == "sg") return FemMethod::SG;
  if (s == "LM" || s == "lm") return FemMethod::LM;
  if (s == "FVE" || s == "fve") return FemMethod::FVE;
  throw InvalidParameter("unknown FEM method '" + std::string(s) + "'");
}

namespace detail {

inline double checked_area(const TriMesh& mesh, const Triangle& t) {
  const double area = triangle_area(mesh, t);
  if (!(area >= kDegenerateArea)) {
    throw DegenerateTriangle("triangle (" + std::to_string(t[0]) + "," +
                             std::to_string(t[1]) + "," + std::to_string(t[2]) +
                             ") has area " + std::to_string(area));
  }
  return area;
}

inline DenseMatrix interior_block(const TriMesh& mesh, const DenseMatrix& full) {
  return full.topLeftCorner(mesh.interior_count, mesh.interior_count);
}

/// Barycentric coordinates of p in triangle (a, b, c).
inline std::array<double, 3> barycentric(const Point& p, const Point& a,
                                         const Point& b, const Point& c) {
  const double area = signed_area(a, b, c);
  return {signed_area(p, b, c) / area, signed_area(a, p, c) / area,
          signed_area(a, b, p) / area};
}

}  // namespace detail

/// Stiffness matrix a(phi_j, phi_i) = (grad phi_j, grad phi_i), all nodes.
inline DenseMatrix assemble_stiffness_full(const TriMesh& mesh) {
  const int n = mesh.node_count();
  DenseMatrix s = DenseMatrix::Zero(n, n);
  for (const auto& t : mesh.triangles) {
    const double area = detail::checked_area(mesh, t);
    std::array<double, 3> bx{}, by{};
    for (int k = 0; k < 3; ++k) {
      const auto& p1 = mesh.nodes[t[(k + 1) % 3]];
      const auto& p2 = mesh.nodes[t[(k + 2) % 3]];
      bx[k] = p1.y - p2.y;
      by[k] = p2.x - p1.x;
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        s(t[a], t[b]) += (bx[a] * bx[b] + by[a] * by[b]) / (4.0 * area);
      }
    }
  }
  return s;
}

inline DenseMatrix assemble_stiffness(const TriMesh& mesh) {
  return detail::interior_block(mesh, assemble_stiffness_full(mesh));
}

/// Exact L2 mass matrix: |K|/6 on the diagonal, |K|/12 off it.
inline DenseMatrix assemble_mass_sg_full(const TriMesh& mesh) {
  const int n = mesh.node_count();
  DenseMatrix m = DenseMatrix::Zero(n, n);
  for (const auto& t : mesh.triangles) {
    const double area = detail::checked_area(mesh, t);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        m(t[a], t[b]) += area / (a == b ? 6.0 : 12.0);
      }
    }
  }
  return m;
}

inline DenseMatrix assemble_mass_sg(const TriMesh& mesh) {
  return detail::interior_block(mesh, assemble_mass_sg_full(mesh));
}

/// Vertex-quadrature (lumped) mass: |K|/3 to each vertex of K.
inline DenseMatrix assemble_mass_lm_full(const TriMesh& mesh) {
  const int n = mesh.node_count();
  DenseMatrix m = DenseMatrix::Zero(n, n);
  for (const auto& t : mesh.triangles) {
    const double area = detail::checked_area(mesh, t);
    for (int a = 0; a < 3; ++a) m(t[a], t[a]) += area / 3.0;
  }
  return m;
}

inline DenseMatrix assemble_mass_lm(const TriMesh& mesh) {
  return detail::interior_block(mesh, assemble_mass_lm_full(mesh));
}

/// Finite volume element mass, entry (i, j) = integral of phi_j over the
/// barycentric control volume V_i.
///
/// Inside a triangle K, V_i is the quadrilateral spanned by vertex i, the
/// midpoints of the two edges at i and the barycenter. It is split into
/// two triangles and the linear integrand is integrated exactly on each
/// (area times mean of the vertex values).
inline DenseMatrix assemble_mass_fve_full(const TriMesh& mesh) {
  const int n = mesh.node_count();
  DenseMatrix m = DenseMatrix::Zero(n, n);
  for (const auto& t : mesh.triangles) {
    detail::checked_area(mesh, t);
    const Point& a = mesh.nodes[t[0]];
    const Point& b = mesh.nodes[t[1]];
    const Point& c = mesh.nodes[t[2]];
    const std::array<Point, 3> v{a, b, c};
    const Point centre{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    auto mid = [](const Point& p, const Point& q) {
      return Point{0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
    };
    for (int i = 0; i < 3; ++i) {
      const Point& vi = v[i];
      const Point m1 = mid(vi, v[(i + 1) % 3]);
      const Point m2 = mid(vi, v[(i + 2) % 3]);
      const std::array<std::array<Point, 3>, 2> pieces{
          {{vi, m1, centre}, {vi, centre, m2}}};
      for (const auto& piece : pieces) {
        const double area = std::abs(signed_area(piece[0], piece[1], piece[2]));
        std::array<double, 3> mean{};
        for (const auto& p : piece) {
          const auto lam = detail::barycentric(p, a, b, c);
          for (int j = 0; j < 3; ++j) mean[j] += lam[j] / 3.0;
        }
        for (int j = 0; j < 3; ++j) m(t[i], t[j]) += area * mean[j];
      }
    }
  }
  return m;
}

inline DenseMatrix assemble_mass_fve(const TriMesh& mesh) {
  return detail::interior_block(mesh, assemble_mass_fve_full(mesh));
}

inline DenseMatrix assemble_mass(const TriMesh& mesh, FemMethod method) {
  switch (method) {
    case FemMethod::SG: return assemble_mass_sg(mesh);
    case FemMethod::LM: return assemble_mass_lm(mesh);
    case FemMethod::FVE: return assemble_mass_fve(mesh);
  }
  throw InvalidParameter("assemble_mass: unknown method");
}

inline constexpr double kOffDiagonalTolerance = 1e-14;

/// Symmetric positive definite with non-positive off-diagonal entries.
inline bool is_stieltjes(const DenseMatrix& a) {
  if (a.rows() != a.cols() || !is_symmetric(a)) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j && a(i, j) > kOffDiagonalTolerance) return false;
    }
  }
  Eigen::LLT<DenseMatrix> llt(a);
  return llt.info() == Eigen::Success;
}

/// Weak row diagonal dominance: sum_{j != i} |a_ij| <= a_ii for every row.
inline bool is_diagonally_dominant(const DenseMatrix& a) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double off = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    if (off > a(i, i) + kOffDiagonalTolerance) return false;
  }
  return true;
}

/// Mass, stiffness and the generalized eigensystem of S phi = lambda M phi
/// over the interior nodes of one mesh.
struct FemSystem {
  FemMethod method = FemMethod::SG;
  DenseMatrix mass;
  DenseMatrix stiffness;
  EigenSystem eigen;

  [[nodiscard]] int interior_count() const {
    return static_cast<int>(stiffness.rows());
  }
};

inline FemSystem build_fem_system(const TriMesh& mesh, FemMethod method) {
  if (mesh.interior_count < 1) {
    throw InvalidParameter("build_fem_system: mesh has no interior node");
  }
  FemSystem sys;
  sys.method = method;
  sys.stiffness = assemble_stiffness(mesh);
  sys.mass = assemble_mass(mesh, method);
  // FVE entries agree to rounding only; the eigensolver wants exact symmetry.
  sys.mass = 0.5 * (sys.mass + sys.mass.transpose());
  sys.stiffness = 0.5 * (sys.stiffness + sys.stiffness.transpose());
  sys.eigen = gen_sym_eigen(sys.stiffness, sys.mass);
  return sys;
}

/// Build a system from given matrices (synthetic tests, imported data).
inline FemSystem make_fem_system(DenseMatrix stiffness, DenseMatrix mass,
                                 FemMethod method = FemMethod::LM) {
  FemSystem sys;
  sys.method = method;
  sys.stiffness = std::move(stiffness);
  sys.mass = std::move(mass);
  sys.eigen = gen_sym_eigen(sys.stiffness, sys.mass);
  return sys;
}

/// Full-precision dense CSV, one matrix row per line.
inline void write_matrix_csv(std::ostream& out, const DenseMatrix& a) {
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) out << ',';
      out << a(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

}  // namespace fracpos

#endif  // FRACPOS_FEM_HPP
