#pragma once

// Uniform Cartesian discretization of the box [-L, L]^3.
//
// Storage is lexicographic with x fastest: index = (k*n + j)*n + i.
// Every reduction walks that order sequentially, so results are
// bit-reproducible. Grid points on the box faces are unknowns; the
// homogeneous Dirichlet condition lives on a ghost layer one spacing outside.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spwells/error.hpp"

namespace spwells {

struct Grid3 {
  int n = 0;                // points per axis
  double half_width = 0.0;  // L
  double h = 0.0;           // 2L/(n-1)

  std::size_t size() const noexcept { return std::size_t(n) * n * n; }
  double cell_volume() const noexcept { return h * h * h; }

  // Exactly antisymmetric under i -> n-1-i, so mirrored geometries sample identically.
  double coord(int i) const noexcept { return 0.5 * h * double(2 * i - (n - 1)); }

  std::size_t index(int i, int j, int k) const noexcept {
    return (std::size_t(k) * n + std::size_t(j)) * n + std::size_t(i);
  }

  bool operator==(const Grid3&) const = default;
};

inline Grid3 build_grid(int n, double half_width) {
  if (n < 8) throw ConfigError("grid too coarse: need at least 8 points per axis, got " +
                               std::to_string(n));
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw ConfigError("grid half width must be positive and finite");
  return Grid3{n, half_width, 2.0 * half_width / double(n - 1)};
}

struct ScalarField {
  Grid3 grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid3& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const Grid3& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw GridMismatch();
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t p) noexcept { return values[p]; }
  double operator[](std::size_t p) const noexcept { return values[p]; }
};

struct RegionMask {
  Grid3 grid;
  std::vector<std::uint8_t> inside;

  RegionMask() = default;
  explicit RegionMask(const Grid3& g, bool fill = false) : grid(g), inside(g.size(), fill ? 1 : 0) {}

  std::size_t size() const noexcept { return inside.size(); }
  bool operator[](std::size_t p) const noexcept { return inside[p] != 0; }
  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (auto b : inside) c += b;
    return c;
  }
};

inline void require_same_grid(const Grid3& a, const Grid3& b) {
  if (!(a == b)) throw GridMismatch();
}

// Samples fn(x, y, z) at every grid point.
inline ScalarField sample(const Grid3& g, const std::function<double(double, double, double)>& fn) {
  ScalarField f(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) f[g.index(i, j, k)] = fn(g.coord(i), g.coord(j), g.coord(k));
  return f;
}

inline RegionMask mask_where(const Grid3& g, const std::function<bool(double, double, double)>& pred) {
  RegionMask m(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) m.inside[g.index(i, j, k)] = pred(g.coord(i), g.coord(j), g.coord(k)) ? 1 : 0;
  return m;
}

inline RegionMask complement(const RegionMask& m) {
  RegionMask c(m.grid);
  for (std::size_t p = 0; p < m.size(); ++p) c.inside[p] = m.inside[p] ? 0 : 1;
  return c;
}

inline RegionMask union_of(const std::vector<RegionMask>& masks, const Grid3& g) {
  RegionMask u(g);
  for (const auto& m : masks) {
    require_same_grid(m.grid, g);
    for (std::size_t p = 0; p < u.size(); ++p) u.inside[p] |= m.inside[p];
  }
  return u;
}

inline bool pairwise_disjoint(const std::vector<RegionMask>& masks) {
  if (masks.empty()) return true;
  std::vector<std::uint8_t> seen(masks.front().size(), 0);
  for (const auto& m : masks) {
    if (m.size() != seen.size()) throw GridMismatch();
    for (std::size_t p = 0; p < seen.size(); ++p) {
      if (m.inside[p] && seen[p]) return false;
      seen[p] |= m.inside[p];
    }
  }
  return true;
}

// f restricted to the mask, zero elsewhere.
inline ScalarField restrict_to(const ScalarField& f, const RegionMask& m) {
  require_same_grid(f.grid, m.grid);
  ScalarField r(f.grid);
  for (std::size_t p = 0; p < f.size(); ++p) r[p] = m.inside[p] ? f[p] : 0.0;
  return r;
}

// Σ f(x_i) h³, over the mask when one is given.
inline double integrate(const ScalarField& f, const RegionMask* mask = nullptr) {
  double s = 0.0;
  if (mask) {
    require_same_grid(f.grid, mask->grid);
    for (std::size_t p = 0; p < f.size(); ++p)
      if (mask->inside[p]) s += f[p];
  } else {
    for (double v : f.values) s += v;
  }
  return s * f.grid.cell_volume();
}

// Σ a_i b_i h³.
inline double inner(const ScalarField& a, const ScalarField& b, const RegionMask* mask = nullptr) {
  require_same_grid(a.grid, b.grid);
  double s = 0.0;
  if (mask) {
    require_same_grid(a.grid, mask->grid);
    for (std::size_t p = 0; p < a.size(); ++p)
      if (mask->inside[p]) s += a[p] * b[p];
  } else {
    for (std::size_t p = 0; p < a.size(); ++p) s += a[p] * b[p];
  }
  return s * a.grid.cell_volume();
}

inline double l2_norm(const ScalarField& a, const RegionMask* mask = nullptr) {
  return std::sqrt(inner(a, a, mask));
}

// Sum of the six nearest-neighbour values, zero beyond the box.
inline ScalarField neighbor_sum(const ScalarField& u) {
  const Grid3& g = u.grid;
  const int n = g.n;
  const std::size_t sx = 1, sy = std::size_t(n), sz = std::size_t(n) * n;
  ScalarField out(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t p = g.index(i, j, k);
        double xs = (i > 0 ? u[p - sx] : 0.0) + (i < n - 1 ? u[p + sx] : 0.0);
        double ys = (j > 0 ? u[p - sy] : 0.0) + (j < n - 1 ? u[p + sy] : 0.0);
        double zs = (k > 0 ? u[p - sz] : 0.0) + (k < n - 1 ? u[p + sz] : 0.0);
        out[p] = xs + ys + zs;
      }
  return out;
}

// 7-point Laplacian with homogeneous Dirichlet ghost values.
inline ScalarField apply_laplacian(const ScalarField& u) {
  ScalarField out = neighbor_sum(u);
  const double ih2 = 1.0 / (u.grid.h * u.grid.h);
  for (std::size_t p = 0; p < u.size(); ++p) out[p] = (out[p] - 6.0 * u[p]) * ih2;
  return out;
}

// How the edges of the Dirichlet form are chosen on a support set S.
//   dirichlet: every lattice edge, ghost edges included (u is zero off S, so this is H¹₀(S));
//   neumann:   only edges with both endpoints in S (natural boundary condition on ∂S).
enum class EdgeMode { dirichlet, neumann };

// Diagonal of the graph Laplacian per point of S (0 off S).
inline std::vector<double> stiffness_degree(const RegionMask& support, EdgeMode mode) {
  const Grid3& g = support.grid;
  const int n = g.n;
  std::vector<double> deg(g.size(), 0.0);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t p = g.index(i, j, k);
        if (!support.inside[p]) continue;
        if (mode == EdgeMode::dirichlet) {
          deg[p] = 6.0;
          continue;
        }
        int d = 0;
        if (i > 0 && support.inside[g.index(i - 1, j, k)]) ++d;
        if (i < n - 1 && support.inside[g.index(i + 1, j, k)]) ++d;
        if (j > 0 && support.inside[g.index(i, j - 1, k)]) ++d;
        if (j < n - 1 && support.inside[g.index(i, j + 1, k)]) ++d;
        if (k > 0 && support.inside[g.index(i, j, k - 1)]) ++d;
        if (k < n - 1 && support.inside[g.index(i, j, k + 1)]) ++d;
        deg[p] = double(d);
      }
  return deg;
}

// (Ku)_i = (deg_i u_i - Σ_nb u_nb)/h² + w_i u_i on S, zero off S.
// u must vanish off S; then <v, Ku> h³ is exactly the edge form of the chosen mode.
inline ScalarField apply_stiffness(const ScalarField& u, const RegionMask& support,
                                   const std::vector<double>& degree, const ScalarField& weight) {
  ScalarField out = neighbor_sum(u);
  const double ih2 = 1.0 / (u.grid.h * u.grid.h);
  for (std::size_t p = 0; p < u.size(); ++p)
    out[p] = support.inside[p] ? (degree[p] * u[p] - out[p]) * ih2 + weight[p] * u[p] : 0.0;
  return out;
}

// Pointwise density of ‖u‖²_λ: forward-difference edges assigned to their lower endpoint,
// plus the lower ghost edge on the low faces, plus (λa+1)u². Summing over all points gives
// the full Dirichlet form; summing over a mask gives ‖u‖²_{λ,O}.
inline ScalarField norm_lambda_density(const ScalarField& u, const ScalarField& a, double lambda) {
  require_same_grid(u.grid, a.grid);
  const Grid3& g = u.grid;
  const int n = g.n;
  const double ih2 = 1.0 / (g.h * g.h);
  const std::size_t sx = 1, sy = std::size_t(n), sz = std::size_t(n) * n;
  ScalarField e(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t p = g.index(i, j, k);
        const double v = u[p];
        double dx = (i < n - 1 ? u[p + sx] : 0.0) - v;
        double dy = (j < n - 1 ? u[p + sy] : 0.0) - v;
        double dz = (k < n - 1 ? u[p + sz] : 0.0) - v;
        double grad2 = dx * dx + dy * dy + dz * dz;
        if (i == 0) grad2 += v * v;
        if (j == 0) grad2 += v * v;
        if (k == 0) grad2 += v * v;
        e[p] = grad2 * ih2 + (lambda * a[p] + 1.0) * v * v;
      }
  return e;
}

inline double norm_lambda(const ScalarField& u, const ScalarField& a, double lambda,
                          const RegionMask* mask = nullptr) {
  if (lambda < 0.0) throw ConfigError("norm_lambda: lambda must be nonnegative");
  for (double v : a.values)
    if (v < 0.0) throw ConfigError("norm_lambda: potential a(x) has negative entries");
  return std::sqrt(integrate(norm_lambda_density(u, a, lambda), mask));
}

inline bool all_finite(const ScalarField& f) {
  for (double v : f.values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace spwells
