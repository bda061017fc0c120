#pragma once

// Potential wells: the zero set of a(x) is a union of disjoint closed balls
// Ω_j; each has an enlarged open neighbourhood Ω'_j (radius + margin), and the
// enlargements are pairwise disjoint as well.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "spwells/error.hpp"
#include "spwells/grid.hpp"

namespace spwells {

struct Ball {
  std::array<double, 3> center{};
  double radius = 0.0;
};

struct WellGeometry {
  std::vector<Ball> wells;
  double margin = 0.0;      // ε_Ω: Ω'_j is the ball of radius r_j + margin
  double plateau = 1.0;     // a_max
  double ramp_width = 1.0;  // a reaches a_max at this distance from the wells

  std::size_t k() const noexcept { return wells.size(); }
};

inline double center_distance(const Ball& a, const Ball& b) {
  const double dx = a.center[0] - b.center[0];
  const double dy = a.center[1] - b.center[1];
  const double dz = a.center[2] - b.center[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline WellGeometry build_geometry(std::vector<Ball> wells, double margin, double plateau,
                                   double ramp_width) {
  if (wells.empty()) throw ConfigError("geometry needs at least one well");
  if (!(margin > 0.0)) throw ConfigError("enlargement margin must be positive");
  if (!(plateau > 0.0)) throw ConfigError("potential plateau a_max must be positive");
  if (!(ramp_width > 0.0)) throw ConfigError("potential ramp width must be positive");
  for (std::size_t i = 0; i < wells.size(); ++i)
    if (!(wells[i].radius > 0.0)) throw ConfigError("well " + std::to_string(i) + " has non-positive radius");
  for (std::size_t i = 0; i < wells.size(); ++i)
    for (std::size_t j = i + 1; j < wells.size(); ++j) {
      const double gap = center_distance(wells[i], wells[j]) - wells[i].radius - wells[j].radius;
      const std::string pair = std::to_string(i) + " and " + std::to_string(j);
      if (!(gap > 0.0)) throw ConfigError("wells " + pair + " overlap or touch (gap " + std::to_string(gap) + ")");
      if (!(gap - 2.0 * margin > 0.0))
        throw ConfigError("enlarged neighbourhoods of wells " + pair + " overlap (gap " +
                          std::to_string(gap - 2.0 * margin) + ")");
    }
  return WellGeometry{std::move(wells), margin, plateau, ramp_width};
}

// Non-empty sorted subset Υ of {0, ..., k-1}.
struct Selection {
  std::vector<int> wells;
  bool contains(int j) const { return std::find(wells.begin(), wells.end(), j) != wells.end(); }
  std::size_t size() const noexcept { return wells.size(); }
};

inline Selection make_selection(std::vector<int> indices, std::size_t k) {
  if (indices.empty()) throw ConfigError("the well selection must be a non-empty subset Υ of the wells");
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw ConfigError("well selection contains a repeated index");
  for (int j : indices)
    if (j < 0 || std::size_t(j) >= k)
      throw ConfigError("well index " + std::to_string(j) + " out of range (k = " + std::to_string(k) + ")");
  return Selection{std::move(indices)};
}

// Distance from (x,y,z) to the union of the closed well balls.
inline double distance_to_wells(const WellGeometry& g, double x, double y, double z) {
  double best = INFINITY;
  for (const Ball& b : g.wells) {
    const double dx = x - b.center[0], dy = y - b.center[1], dz = z - b.center[2];
    best = std::min(best, std::max(0.0, std::sqrt(dx * dx + dy * dy + dz * dz) - b.radius));
  }
  return best;
}

// a(x) = a_max · min(1, d/ρ_w): zero on the closed wells, Lipschitz, saturating.
inline ScalarField sample_potential(const WellGeometry& g, const Grid3& grid) {
  return sample(grid, [&](double x, double y, double z) {
    return g.plateau * std::min(1.0, distance_to_wells(g, x, y, z) / g.ramp_width);
  });
}

inline bool in_ball(const Ball& b, double extra, double x, double y, double z, bool closed) {
  const double dx = x - b.center[0], dy = y - b.center[1], dz = z - b.center[2];
  const double r = b.radius + extra;
  const double d2 = dx * dx + dy * dy + dz * dz;
  return closed ? d2 <= r * r : d2 < r * r;
}

struct WellMasks {
  std::vector<RegionMask> wells;     // Ω_j, closed balls
  std::vector<RegionMask> enlarged;  // Ω'_j, open enlarged balls
  RegionMask selected;               // Ω_Υ
  RegionMask selected_enlarged;      // Ω'_Υ
  ScalarField chi;                   // χ_Υ ∈ {0,1}
};

inline WellMasks masks(const WellGeometry& g, const Grid3& grid, const Selection& sel) {
  WellMasks m;
  for (const Ball& b : g.wells) {
    m.wells.push_back(mask_where(grid, [&](double x, double y, double z) { return in_ball(b, 0.0, x, y, z, true); }));
    m.enlarged.push_back(
        mask_where(grid, [&](double x, double y, double z) { return in_ball(b, g.margin, x, y, z, false); }));
  }
  std::vector<RegionMask> chosen, chosen_enlarged;
  for (int j : sel.wells) {
    chosen.push_back(m.wells[std::size_t(j)]);
    chosen_enlarged.push_back(m.enlarged[std::size_t(j)]);
  }
  m.selected = union_of(chosen, grid);
  m.selected_enlarged = union_of(chosen_enlarged, grid);
  m.chi = ScalarField(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) m.chi[p] = m.selected_enlarged.inside[p] ? 1.0 : 0.0;
  return m;
}

}  // namespace spwells
