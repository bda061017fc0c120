#pragma once

// Newtonian potential φ_u solving -Δφ = u² on R³, i.e. φ = G * u² with
// G(x) = 1/(4π|x|), discretized as the lattice sum
//     φ_i = h³ Σ_j G_h(x_i - x_j) ρ_j,
// where G_h equals G off the origin and carries a finite self-term at zero
// offset. The fast path evaluates the aperiodic sum by FFT on a grid
// zero-padded to 2n per axis; poisson_direct evaluates it literally.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "spwells/error.hpp"
#include "spwells/grid.hpp"

namespace spwells {

// Zero-offset weights in units of 1/(4πh).
enum class SelfTerm {
  // -ζ_{Z³}(1/2): removes the O(h²) error of the lattice sum for smooth densities.
  lattice_regularized,
  // (1/h³)∫_cell 1/|x| dx · h = 3 ln(2+√3) - π/2.
  cell_average,
};

inline constexpr double kLatticeSelfTerm = 2.8372974794806;
inline double cell_average_self_term() {
  return 3.0 * std::log(2.0 + std::sqrt(3.0)) - 0.5 * std::numbers::pi;
}

struct CoulombOptions {
  SelfTerm self_term = SelfTerm::lattice_regularized;
  double kernel_scale = 1.0;  // != 1 only for fault-injection tests
};

inline double self_term_weight(SelfTerm s) {
  return s == SelfTerm::lattice_regularized ? kLatticeSelfTerm : cell_average_self_term();
}

// G_h at lattice offset (di, dj, dk).
inline double lattice_kernel(int di, int dj, int dk, double h, const CoulombOptions& opt) {
  const double four_pi = 4.0 * std::numbers::pi;
  if (di == 0 && dj == 0 && dk == 0) return opt.kernel_scale * self_term_weight(opt.self_term) / (four_pi * h);
  const double r = h * std::sqrt(double(di) * di + double(dj) * dj + double(dk) * dk);
  return opt.kernel_scale / (four_pi * r);
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
inline ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

}  // namespace detail

class CoulombSolver {
 public:
  explicit CoulombSolver(const Grid3& grid, CoulombOptions options = {})
      : grid_(grid), options_(options), m_(2 * grid.n) {
    const std::size_t real_size = padded_real_size();
    const std::size_t cplx_size = padded_complex_size();
    auto work = detail::alloc_real(real_size);
    auto spec = detail::alloc_complex(cplx_size);
    {
      std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_3d(m_, m_, m_, work.get(), spec.get(), FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_c2r_3d(m_, m_, m_, spec.get(), work.get(), FFTW_ESTIMATE);
    }
    if (!forward_ || !backward_) throw std::runtime_error("FFTW planning failed");

    // Kernel on the padded lattice, offsets wrapped to [-n, n-1].
    const int n = grid.n;
    for (int c = 0; c < m_; ++c)
      for (int b = 0; b < m_; ++b)
        for (int a = 0; a < m_; ++a) {
          const int di = a < n ? a : a - m_;
          const int dj = b < n ? b : b - m_;
          const int dk = c < n ? c : c - m_;
          work[(std::size_t(c) * m_ + b) * m_ + a] = lattice_kernel(di, dj, dk, grid.h, options_);
        }
    fftw_execute_dft_r2c(forward_, work.get(), spec.get());
    // Fold the h³ quadrature weight and the 1/m³ inverse-FFT normalization into the kernel.
    const double scale = grid.cell_volume() / double(real_size);
    kernel_hat_.resize(cplx_size);
    for (std::size_t p = 0; p < cplx_size; ++p) kernel_hat_[p] = spec[p][0] * scale;
  }

  CoulombSolver(const CoulombSolver&) = delete;
  CoulombSolver& operator=(const CoulombSolver&) = delete;

  ~CoulombSolver() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  const Grid3& grid() const noexcept { return grid_; }
  const CoulombOptions& options() const noexcept { return options_; }

  // φ = G_h * ρ for an arbitrary density on the grid.
  ScalarField potential_of_density(const ScalarField& rho) const {
    require_same_grid(rho.grid, grid_);
    if (!all_finite(rho)) throw ConfigError("Coulomb solve: non-finite input");
    const int n = grid_.n;
    auto work = detail::alloc_real(padded_real_size());
    auto spec = detail::alloc_complex(padded_complex_size());
    std::fill(work.get(), work.get() + padded_real_size(), 0.0);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) work[(std::size_t(k) * m_ + j) * m_ + i] = rho[grid_.index(i, j, k)];
    fftw_execute_dft_r2c(forward_, work.get(), spec.get());
    // The kernel is real-even, so its transform is real.
    for (std::size_t p = 0; p < padded_complex_size(); ++p) {
      spec[p][0] *= kernel_hat_[p];
      spec[p][1] *= kernel_hat_[p];
    }
    fftw_execute_dft_c2r(backward_, spec.get(), work.get());
    ScalarField phi(grid_);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) phi[grid_.index(i, j, k)] = work[(std::size_t(k) * m_ + j) * m_ + i];
    return phi;
  }

  // φ_u, the solution of -Δφ = u².
  ScalarField poisson_fft(const ScalarField& u) const { return potential_of_density(square(u)); }

  static ScalarField square(const ScalarField& u) {
    ScalarField rho(u.grid);
    for (std::size_t p = 0; p < u.size(); ++p) rho[p] = u[p] * u[p];
    return rho;
  }

 private:
  std::size_t padded_real_size() const noexcept { return std::size_t(m_) * m_ * m_; }
  std::size_t padded_complex_size() const noexcept { return std::size_t(m_) * m_ * (m_ / 2 + 1); }

  Grid3 grid_;
  CoulombOptions options_;
  int m_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<double> kernel_hat_;
};

inline constexpr std::size_t kDirectSummationLimit = 32 * 32 * 32;

// Brute-force O(N²) evaluation of the same lattice sum.
inline ScalarField poisson_direct(const ScalarField& u, const CoulombOptions& options = {}) {
  const Grid3& g = u.grid;
  if (g.size() > kDirectSummationLimit)
    throw ConfigError("poisson_direct: grid too large for direct summation (limit 32^3 points)");
  if (!all_finite(u)) throw ConfigError("poisson_direct: non-finite input");
  const int n = g.n;
  const double w = g.cell_volume();
  // Kernel table over all offsets |d| < n per axis.
  const int m = 2 * n - 1;
  std::vector<double> table(std::size_t(m) * m * m);
  for (int dk = -(n - 1); dk < n; ++dk)
    for (int dj = -(n - 1); dj < n; ++dj)
      for (int di = -(n - 1); di < n; ++di)
        table[(std::size_t(dk + n - 1) * m + std::size_t(dj + n - 1)) * m + std::size_t(di + n - 1)] =
            lattice_kernel(di, dj, dk, g.h, options);
  std::vector<double> rho(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) rho[p] = u[p] * u[p];

  ScalarField phi(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int kk = 0; kk < n; ++kk)
          for (int jj = 0; jj < n; ++jj) {
            const double* row = &table[(std::size_t(k - kk + n - 1) * m + std::size_t(j - jj + n - 1)) * m];
            const double* src = &rho[g.index(0, jj, kk)];
            for (int ii = 0; ii < n; ++ii) s += row[i - ii + n - 1] * src[ii];
          }
        phi[g.index(i, j, k)] = s * w;
      }
  return phi;
}

// ∫ φ_u u² dx.
inline double nonlocal_energy(const CoulombSolver& solver, const ScalarField& u) {
  const ScalarField phi = solver.poisson_fft(u);
  return inner(phi, CoulombSolver::square(u));
}

// ∫_{R³} |∇φ_u|² dx, evaluated as Σ_box φ (-Δ₄ φ) h³ with a fourth-order
// Laplacian. φ is harmonic off the support of u, so by Green's identity this is
// the full-space field energy; φ is computed on the box grown by two ghost layers
// so the stencil sees true exterior values.
inline double potential_field_energy(const ScalarField& u, const CoulombOptions& options = {}) {
  constexpr int ghost = 2;
  const Grid3& g = u.grid;
  const Grid3 ext{g.n + 2 * ghost, g.half_width + ghost * g.h, g.h};
  ScalarField rho(ext);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const double v = u[g.index(i, j, k)];
        rho[ext.index(i + ghost, j + ghost, k + ghost)] = v * v;
      }
  const CoulombSolver solver(ext, options);
  const ScalarField phi = solver.potential_of_density(rho);

  const double ih2 = 1.0 / (g.h * g.h);
  const std::size_t sx = 1, sy = std::size_t(ext.n), sz = std::size_t(ext.n) * ext.n;
  auto d2 = [&](std::size_t p, std::size_t s) {
    return (-phi[p - 2 * s] + 16.0 * phi[p - s] - 30.0 * phi[p] + 16.0 * phi[p + s] - phi[p + 2 * s]) / 12.0;
  };
  double total = 0.0;
  for (int k = ghost; k < g.n + ghost; ++k)
    for (int j = ghost; j < g.n + ghost; ++j)
      for (int i = ghost; i < g.n + ghost; ++i) {
        const std::size_t p = ext.index(i, j, k);
        const double lap = (d2(p, sx) + d2(p, sy) + d2(p, sz)) * ih2;
        total -= phi[p] * lap;
      }
  return total * g.cell_volume();
}

}  // namespace spwells
