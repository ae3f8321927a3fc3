#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexure {

using Index = std::ptrdiff_t;

/// Structured grid of unit bilinear quads (2D) or trilinear hexes (3D).
///
/// Nodes are numbered column-major in y: in 2D node (ix, iy) has index
/// (nely+1)*ix + iy, and 3D stacks such layers along z. Elements follow the
/// same pattern. y = 0 (2D) or z = 0 (3D) is the fixed bottom interface.
class Mesh {
public:
  Mesh(int nelx, int nely, std::optional<int> nelz = std::nullopt)
      : nelx_(nelx), nely_(nely), nelz_(nelz.value_or(0)), dim_(nelz ? 3 : 2) {
    if (nelx < 1 || nely < 1 || (nelz && *nelz < 1)) {
      throw std::invalid_argument("mesh dimensions must be >= 1, got (" + std::to_string(nelx) + ", " +
                                  std::to_string(nely) + (nelz ? ", " + std::to_string(*nelz) : "") + ")");
    }
    build();
  }

  int dim() const noexcept { return dim_; }
  int nelx() const noexcept { return nelx_; }
  int nely() const noexcept { return nely_; }
  int nelz() const noexcept { return nelz_; }

  Index element_count() const noexcept {
    return Index(nelx_) * nely_ * (dim_ == 3 ? nelz_ : 1);
  }
  Index node_count() const noexcept {
    return Index(nelx_ + 1) * (nely_ + 1) * (dim_ == 3 ? nelz_ + 1 : 1);
  }
  int nodes_per_element() const noexcept { return dim_ == 2 ? 4 : 8; }
  int dofs_per_element() const noexcept { return nodes_per_element() * dim_; }
  Index dof_count() const noexcept { return node_count() * dim_; }

  Index node_index(int ix, int iy, int iz = 0) const noexcept {
    return Index(iz) * (nelx_ + 1) * (nely_ + 1) + Index(ix) * (nely_ + 1) + iy;
  }
  Index element_index(int ex, int ey, int ez = 0) const noexcept {
    return Index(ez) * nelx_ * nely_ + Index(ex) * nely_ + ey;
  }

  /// Integer grid coordinates of an element, {ex, ey, ez}.
  std::array<int, 3> element_coords(Index e) const noexcept {
    const Index layer = Index(nelx_) * nely_;
    const int ez = int(e / layer);
    const Index r = e % layer;
    return {int(r / nely_), int(r % nely_), ez};
  }

  /// Physical coordinates of a node (unit element size).
  std::array<double, 3> node_position(Index n) const noexcept {
    const Index layer = Index(nelx_ + 1) * (nely_ + 1);
    const Index iz = n / layer;
    const Index r = n % layer;
    return {double(r / (nely_ + 1)), double(r % (nely_ + 1)), double(iz)};
  }

  std::array<double, 3> element_center(Index e) const noexcept {
    const auto c = element_coords(e);
    return {c[0] + 0.5, c[1] + 0.5, dim_ == 3 ? c[2] + 0.5 : 0.0};
  }

  /// Domain centroid; z component is 0 in 2D.
  std::array<double, 3> centroid() const noexcept {
    return {nelx_ / 2.0, nely_ / 2.0, dim_ == 3 ? nelz_ / 2.0 : 0.0};
  }

  std::span<const Index> element_nodes(Index e) const {
    return {connectivity_.data() + e * nodes_per_element(), std::size_t(nodes_per_element())};
  }

  /// Global displacement indices of element e in local order
  /// (node-major, components x, y[, z]).
  std::vector<Index> element_dof_map(Index e) const {
    if (e < 0 || e >= element_count()) {
      throw std::invalid_argument("element index " + std::to_string(e) + " out of range [0, " +
                                  std::to_string(element_count()) + ")");
    }
    std::vector<Index> dofs;
    dofs.reserve(dofs_per_element());
    for (Index n : element_nodes(e)) {
      for (int c = 0; c < dim_; ++c) dofs.push_back(n * dim_ + c);
    }
    return dofs;
  }

  const std::vector<Index>& interface_bottom() const noexcept { return bottom_; }
  const std::vector<Index>& interface_top() const noexcept { return top_; }

private:
  void build() {
    const Index ne = element_count();
    connectivity_.resize(ne * nodes_per_element());
    if (dim_ == 2) {
      for (int ex = 0; ex < nelx_; ++ex) {
        for (int ey = 0; ey < nely_; ++ey) {
          Index* c = connectivity_.data() + element_index(ex, ey) * 4;
          // counterclockwise from lower-left
          c[0] = node_index(ex, ey);
          c[1] = node_index(ex + 1, ey);
          c[2] = node_index(ex + 1, ey + 1);
          c[3] = node_index(ex, ey + 1);
        }
      }
      for (int ix = 0; ix <= nelx_; ++ix) {
        bottom_.push_back(node_index(ix, 0));
        top_.push_back(node_index(ix, nely_));
      }
    } else {
      for (int ez = 0; ez < nelz_; ++ez) {
        for (int ex = 0; ex < nelx_; ++ex) {
          for (int ey = 0; ey < nely_; ++ey) {
            Index* c = connectivity_.data() + element_index(ex, ey, ez) * 8;
            for (int k = 0; k < 2; ++k) {
              c[4 * k + 0] = node_index(ex, ey, ez + k);
              c[4 * k + 1] = node_index(ex + 1, ey, ez + k);
              c[4 * k + 2] = node_index(ex + 1, ey + 1, ez + k);
              c[4 * k + 3] = node_index(ex, ey + 1, ez + k);
            }
          }
        }
      }
      for (int ix = 0; ix <= nelx_; ++ix) {
        for (int iy = 0; iy <= nely_; ++iy) {
          bottom_.push_back(node_index(ix, iy, 0));
          top_.push_back(node_index(ix, iy, nelz_));
        }
      }
    }
  }

  int nelx_, nely_, nelz_, dim_;
  std::vector<Index> connectivity_;
  std::vector<Index> bottom_, top_;
};

inline Mesh build_mesh(int nelx, int nely, std::optional<int> nelz = std::nullopt) {
  return Mesh(nelx, nely, nelz);
}

/// Bottom and top interface node sets (corner nodes included in both rows).
inline std::pair<std::vector<Index>, std::vector<Index>> interface_sets(const Mesh& mesh) {
  return {mesh.interface_bottom(), mesh.interface_top()};
}

} // namespace flexure
