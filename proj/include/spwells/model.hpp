#pragma once

// The nonlinearity f(s) = (s⁺)^q, its primitive F, the cutoff f̃ and the
// penalized g(x, s) = χ_Υ(x) f(s) + (1 - χ_Υ(x)) f̃(s).

#include <algorithm>
#include <cmath>
#include <string>

#include "spwells/error.hpp"

namespace spwells {

struct ModelParams {
  double q = 4.0;                 // f(s) = (s⁺)^q, 3 < q < 5
  double delta_coercivity = 0.5;  // δ in ‖u‖² - ν|u|² ≥ δ‖u‖²
  double nu = 0.5;                // 1 - δ
  double a_cut = 0.0;             // f(a)/a = ν
  double lambda = 1.0;            // depth parameter, ≥ 1
  double theta = 5.0;             // q + 1

  double f(double s) const { return s > 0.0 ? std::pow(s, q) : 0.0; }
  double F(double s) const { return s > 0.0 ? std::pow(s, q + 1.0) / (q + 1.0) : 0.0; }

  double f_tilde(double s) const { return s <= a_cut ? f(s) : nu * s; }
  double F_tilde(double s) const {
    if (s <= a_cut) return F(s);
    return F(a_cut) + 0.5 * nu * (s * s - a_cut * a_cut);
  }

  // inside: x ∈ Ω'_Υ.
  double g(bool inside, double s) const { return inside ? f(s) : f_tilde(s); }
  double G(bool inside, double s) const { return inside ? F(s) : F_tilde(s); }
};

struct CutoffConstants {
  double nu;
  double a_cut;
};

inline CutoffConstants cutoff_constants(double delta_coercivity, double q) {
  if (!(delta_coercivity > 0.0 && delta_coercivity < 1.0))
    throw ConfigError("coercivity constant delta must lie in (0, 1)");
  if (!(q > 3.0 && q < 5.0)) throw ConfigError("exponent q must lie in (3, 5)");
  const double nu = 1.0 - delta_coercivity;
  return {nu, std::pow(nu, 1.0 / (q - 1.0))};
}

inline ModelParams make_params(double q, double delta_coercivity, double lambda = 1.0) {
  const CutoffConstants c = cutoff_constants(delta_coercivity, q);
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and at least 1");
  ModelParams p;
  p.q = q;
  p.delta_coercivity = delta_coercivity;
  p.nu = c.nu;
  p.a_cut = c.a_cut;
  p.lambda = lambda;
  p.theta = q + 1.0;
  return p;
}

inline ModelParams with_lambda(ModelParams p, double lambda) {
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and at least 1");
  p.lambda = lambda;
  return p;
}

}  // namespace spwells
