#pragma once

// Post-hoc design measures: interface connectivity and minimum feature size.

#include "flexure/mesh.hpp"

#include <deque>
#include <span>
#include <vector>

namespace flexure {

/// True if elements with density > threshold form a face-connected path
/// from the bottom element layer to the top element layer.
inline bool connects_interfaces(const Mesh& mesh, std::span<const double> x, double threshold = 0.5) {
  const Index n = mesh.element_count();
  const int nz = mesh.dim() == 3 ? mesh.nelz() : 1;
  auto solid = [&](Index e) { return x[e] > threshold; };
  auto layer_of = [&](Index e) {
    const auto c = mesh.element_coords(e);
    return mesh.dim() == 3 ? c[2] : c[1];
  };
  const int last = mesh.dim() == 3 ? mesh.nelz() - 1 : mesh.nely() - 1;
  std::vector<char> seen(std::size_t(n), 0);
  std::deque<Index> queue;
  for (Index e = 0; e < n; ++e) {
    if (layer_of(e) == 0 && solid(e)) {
      seen[e] = 1;
      queue.push_back(e);
    }
  }
  while (!queue.empty()) {
    const Index e = queue.front();
    queue.pop_front();
    if (layer_of(e) == last) return true;
    const auto c = mesh.element_coords(e);
    const int steps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& s : steps) {
      const int x0 = c[0] + s[0], y0 = c[1] + s[1], z0 = c[2] + s[2];
      if (x0 < 0 || x0 >= mesh.nelx() || y0 < 0 || y0 >= mesh.nely() || z0 < 0 || z0 >= nz) continue;
      const Index nb = mesh.element_index(x0, y0, z0);
      if (!seen[nb] && solid(nb)) {
        seen[nb] = 1;
        queue.push_back(nb);
      }
    }
  }
  return false;
}

struct FeatureSizeReport {
  Index solid_violations = 0; // solid elements not covered by a width x width solid square
  Index void_violations = 0;
};

/// Morphological opening test on a 2D design thresholded at `threshold`:
/// an element survives if some width x width window containing it is
/// entirely of its own phase. Cells outside the domain count as either phase.
inline FeatureSizeReport minimum_feature_check(const Mesh& mesh, std::span<const double> x, int width,
                                               double threshold = 0.5) {
  FeatureSizeReport rep;
  const int nx = mesh.nelx(), ny = mesh.nely();
  auto phase = [&](int ex, int ey) { return x[mesh.element_index(ex, ey)] > threshold; };
  for (int ex = 0; ex < nx; ++ex) {
    for (int ey = 0; ey < ny; ++ey) {
      const bool p = phase(ex, ey);
      bool covered = false;
      for (int ox = ex - width + 1; ox <= ex && !covered; ++ox) {
        for (int oy = ey - width + 1; oy <= ey && !covered; ++oy) {
          bool uniform = true;
          for (int i = ox; i < ox + width && uniform; ++i)
            for (int j = oy; j < oy + width && uniform; ++j)
              if (i >= 0 && i < nx && j >= 0 && j < ny && phase(i, j) != p) uniform = false;
          covered = uniform;
        }
      }
      if (!covered) ++(p ? rep.solid_violations : rep.void_violations);
    }
  }
  return rep;
}

} // namespace flexure
