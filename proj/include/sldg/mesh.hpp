#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

namespace sldg {

struct CellIndex {
  int i = 0;  // x index
  int j = 0;  // v index

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Uniform Cartesian partition of [0,Lx] x [-v_max, v_max].
///
/// Periodic in x, zero-inflow in v. Cell (i,j) spans
/// [i*dx, (i+1)*dx] x [-v_max + j*dv, -v_max + (j+1)*dv].
class PhaseMesh {
 public:
  PhaseMesh() = default;
  PhaseMesh(double length_x, double v_max, int nx, int nv)
      : lx_(length_x), vmax_(v_max), nx_(nx), nv_(nv) {
    if (!(length_x > 0.0) || !(v_max > 0.0) || nx <= 0 || nv <= 0) {
      throw std::invalid_argument("PhaseMesh: lengths and cell counts must be positive");
    }
    dx_ = lx_ / nx_;
    dv_ = 2.0 * vmax_ / nv_;
  }

  double length_x() const { return lx_; }
  double v_max() const { return vmax_; }
  int nx() const { return nx_; }
  int nv() const { return nv_; }
  double dx() const { return dx_; }
  double dv() const { return dv_; }
  double cell_area() const { return dx_ * dv_; }
  std::size_t num_cells() const { return static_cast<std::size_t>(nx_) * nv_; }

  std::size_t linear(CellIndex c) const {
    return static_cast<std::size_t>(c.i) * nv_ + c.j;
  }
  std::size_t linear(int i, int j) const { return static_cast<std::size_t>(i) * nv_ + j; }

  // Grid lines are defined for every integer index, so unwrapped and ghost
  // indices are valid arguments.
  double x_face(int i) const { return i * dx_; }
  double v_face(int j) const { return -vmax_ + j * dv_; }
  double x_center(int i) const { return (i + 0.5) * dx_; }
  double v_center(int j) const { return -vmax_ + (j + 0.5) * dv_; }

  int wrap_index(int i) const {
    int r = i % nx_;
    return r < 0 ? r + nx_ : r;
  }

  /// Periodic image of x in [0, Lx).
  double wrap_x(double x) const {
    double r = std::fmod(x, lx_);
    if (r < 0.0) r += lx_;
    // fmod of a tiny negative value can round up to Lx itself.
    if (r >= lx_) r -= lx_;
    return r;
  }

  bool v_inside(double v) const { return v >= -vmax_ && v <= vmax_; }

  /// Cell containing (x, v); points on interior faces go to the higher-index
  /// cell. Returns nullopt when v lies outside the velocity domain.
  std::optional<CellIndex> locate_cell(double x, double v) const {
    if (!v_inside(v)) return std::nullopt;
    const double xw = wrap_x(x);
    int i = static_cast<int>(std::floor(xw / dx_));
    if (i >= nx_) i = nx_ - 1;
    if (i < 0) i = 0;
    int j = static_cast<int>(std::floor((v + vmax_) / dv_));
    if (j >= nv_) j = nv_ - 1;
    if (j < 0) j = 0;
    return CellIndex{i, j};
  }

  /// Unwrapped cell column containing x (faces go to the higher index).
  int column_of(double x) const { return static_cast<int>(std::floor(x / dx_)); }
  /// Row containing v, possibly outside [0, nv).
  int row_of(double v) const { return static_cast<int>(std::floor((v + vmax_) / dv_)); }

  friend bool operator==(const PhaseMesh& a, const PhaseMesh& b) {
    return a.lx_ == b.lx_ && a.vmax_ == b.vmax_ && a.nx_ == b.nx_ && a.nv_ == b.nv_;
  }

 private:
  double lx_ = 1.0;
  double vmax_ = 1.0;
  int nx_ = 1;
  int nv_ = 1;
  double dx_ = 1.0;
  double dv_ = 2.0;
};

}  // namespace sldg
