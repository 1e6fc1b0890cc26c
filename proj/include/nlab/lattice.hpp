#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlab/kernel.hpp"
#include "nlab/linalg.hpp"

namespace nlab {

/// Uniform grid on [-S, S]^2 with nodes (i h, j h), |i|, |j| <= m = floor(S/h).
/// Storage is row-major with rows indexed by the second coordinate.
struct Grid {
  double h = 0.1;
  double S = 2.0;
  int m = 20;

  /// Validates h <= 0.25 and S >= 2.
  static Grid make(double h, double S);

  int n() const { return 2 * m + 1; }
  std::size_t size() const { return static_cast<std::size_t>(n()) * n(); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j + m) * n() + static_cast<std::size_t>(i + m);
  }
  int i_of(std::size_t idx) const { return static_cast<int>(idx % n()) - m; }
  int j_of(std::size_t idx) const { return static_cast<int>(idx / n()) - m; }
  Vec2 point(int i, int j) const { return {i * h, j * h}; }
  Vec2 point(std::size_t idx) const { return point(i_of(idx), j_of(idx)); }
  bool contains(int i, int j) const { return i >= -m && i <= m && j >= -m && j <= m; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Nodes t = i h, |i| <= m, of [-S, S].
struct Grid1D {
  double h = 0.1;
  double S = 2.0;
  int m = 20;

  static Grid1D make(double h, double S);
  int n() const { return 2 * m + 1; }
  double t(int i) const { return i * h; }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

/// A value split into a piecewise-constant reference and a deviation from it.
/// Differences of split values are formed part by part, so fields that sit
/// exponentially close to their limits keep full relative precision.
struct Split {
  double ref = 0.0;
  double dev = 0.0;
  double value() const { return ref + dev; }
};

inline double difference(Split a, Split b) { return (a.ref - b.ref) + (a.dev - b.dev); }

/// A one-dimensional field on a Grid1D with constant limits outside it.
/// The reference is the step left / (left+right)/2 / right at t < 0, 0, > 0.
class Profile {
 public:
  Profile(Grid1D grid, double left, double right, std::vector<double> deviation);

  const Grid1D& grid() const { return grid_; }
  double left() const { return left_; }
  double right() const { return right_; }
  std::span<const double> deviation() const { return dev_; }
  std::span<double> deviation() { return dev_; }

  double reference(int i) const { return i < 0 ? left_ : (i > 0 ? right_ : 0.5 * (left_ + right_)); }
  /// Node split for any integer i; nodes outside the grid carry the limits.
  Split node(int i) const;
  double value(int i) const { return node(i).value(); }
  /// Step reference at a continuous position.
  double reference_at(double t) const;
  /// Split at a continuous position: exact at nodes, 4-point Lagrange
  /// interpolation in between.
  Split at(double t) const;

  std::vector<double> values() const;

 private:
  Grid1D grid_;
  double left_, right_;
  std::vector<double> dev_;
};

/// Rule that supplies a field outside the computational square.
class Farfield {
 public:
  enum class Kind { None, Constant, OneDim, Analytic };

  static Farfield none() { return Farfield(); }
  static Farfield constant(double v);
  /// u(x) = w(x . a) with w given by the profile; `source` is the profile
  /// file path used when the field is written to disk.
  static Farfield onedim(Vec2 direction, std::shared_ptr<const Profile> profile, std::string source = {});
  static Farfield analytic(std::function<double(Vec2)> fn);

  Kind kind() const { return kind_; }
  double constant_value() const { return value_; }
  Vec2 direction() const { return direction_; }
  const std::shared_ptr<const Profile>& profile() const { return profile_; }
  const std::string& source() const { return source_; }
  void set_source(std::string s) { source_ = std::move(s); }

  /// Reference part of the field at node (i, j): the profile step for
  /// one-dimensional rules, 0 otherwise.
  double reference(const Grid& g, int i, int j) const;
  /// Split value at a node outside the square. Throws FarfieldMissing for
  /// Kind::None.
  Split outside(const Grid& g, int i, int j) const;

 private:
  Kind kind_ = Kind::None;
  double value_ = 0.0;
  Vec2 direction_{0.0, 1.0};
  std::shared_ptr<const Profile> profile_;
  std::function<double(Vec2)> fn_;
  std::string source_;
};

/// Scalar field on the nodes of a Grid, plus the farfield rule.
class Field {
 public:
  Field() : Field(Grid{}) {}
  explicit Field(const Grid& g, Farfield ff = Farfield::none());

  /// Builds a field from full nodal values.
  static Field from_values(const Grid& g, std::span<const double> values, Farfield ff = Farfield::none());
  static Field from_function(const Grid& g, const std::function<double(Vec2)>& fn, Farfield ff = Farfield::none());
  static Field constant(const Grid& g, double c) {
    Field f(g, Farfield::constant(c));
    f.fill(c);
    return f;
  }

  const Grid& grid() const { return grid_; }
  const Farfield& farfield() const { return farfield_; }
  /// Replaces the farfield rule, keeping the full nodal values.
  void set_farfield(Farfield ff);
  bool has_reference() const { return !ref_.empty(); }

  double reference(std::size_t idx) const { return ref_.empty() ? 0.0 : ref_[idx]; }
  std::span<double> deviations() { return dev_; }
  std::span<const double> deviations() const { return dev_; }

  /// Split value at any node; outside the square the farfield rule is read.
  Split split(int i, int j) const;
  double value(int i, int j) const { return split(i, j).value(); }
  double value(std::size_t idx) const { return reference(idx) + dev_[idx]; }
  std::vector<double> values() const;
  void fill(double v);
  void set_value(std::size_t idx, double v) { dev_[idx] = v - reference(idx); }

 private:
  void rebuild_reference();

  Grid grid_;
  Farfield farfield_;
  std::vector<double> ref_;  // empty when the reference is identically zero
  std::vector<double> dev_;
};

/// Field values on the square plus a band of `pad` nodes read from the
/// farfield rule.
struct PaddedField {
  int m = 0, pad = 0, width = 0;
  bool has_ref = false;
  std::vector<double> ref, dev;
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j + m + pad) * width + static_cast<std::size_t>(i + m + pad);
  }
  Split split(std::size_t p) const { return {has_ref ? ref[p] : 0.0, dev[p]}; }
};

PaddedField pad_field(const Field& f, int pad);

struct Offset {
  int d1 = 0;
  int d2 = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Discrete nonlocal operator: symmetric nonnegative weights on integer
/// offsets, weight(o) = int_{cell(o)} K. The origin cell is folded into the
/// four nearest neighbours as a second difference.
struct StencilOperator {
  double h = 0.0;
  std::vector<Offset> offsets;  // full symmetric set, origin excluded
  std::vector<double> weights;
  std::vector<Offset> half_offsets;  // one representative of each +-o pair
  std::vector<double> half_weights;
  int reach = 0;
  double total_weight = 0.0;

  double weight(Offset o) const;
  double weight_sum() const { return total_weight; }
  /// sum_o weight(o) |o h|^2
  double second_moment() const;
};

/// Assembles the stencil. Throws InvalidArgument if h > 0.25.
StencilOperator build_stencil(const Kernel& k, const Grid& g);
StencilOperator build_stencil(const Kernel& k, double h);

/// One-dimensional stencil, weights stored for offsets k = 1..reach.
struct Stencil1D {
  double h = 0.0;
  std::vector<double> weights;  // weights[k-1] for offset +-k
  int reach() const { return static_cast<int>(weights.size()); }
  double total_weight() const;
  double second_moment() const;
};

/// Stencil of the marginal kernel: weight(k) = int_{cell k} K1, with the
/// origin cell folded into k = +-1.
Stencil1D build_stencil_1d(const MarginalKernel& k1, double h);

/// Line sums of a 2D stencil: the exact action of the 2D operator on fields
/// that depend on the coordinate `axis` (1 or 2) only.
Stencil1D marginal_stencil(const StencilOperator& L, int axis = 2);

/// (L_h u)(x) = 1/2 sum_o weight(o) (2u(x) - u(x+o h) - u(x-o h)) at every
/// node of the square. The result has no farfield rule.
Field apply(const StencilOperator& L, const Field& u);

/// sum_x sum_o weight(o) (v(x)-v(x+o))(w(x)-w(x+o)) h^2. At least one of
/// v, w must vanish within distance 1 of the square's edge.
double bilinear_B(const StencilOperator& L, const Field& v, const Field& w);

/// 1/2 B(w, w).
double hk_energy(const StencilOperator& L, const Field& w);

/// (L u)(t_i) for every node of the profile's grid.
std::vector<double> apply_1d(const Stencil1D& L, const Profile& u);

/// Grid nodes with |x| < R.
std::vector<std::size_t> ball_nodes(const Grid& g, double R);

/// A = L_h - diag(potential) restricted to a node set, zero outside it.
/// The operator is symmetric. apply() reuses an internal buffer and is not
/// reentrant.
class MaskedOperator {
 public:
  MaskedOperator(const StencilOperator& L, const Grid& g, std::vector<std::size_t> nodes,
                 std::vector<double> potential);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  const std::vector<double>& potential() const { return potential_; }
  const Grid& grid() const { return grid_; }

  void apply(std::span<const double> x, std::span<double> y) const;
  LinearMap as_map() const {
    return [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
  }

 private:
  const StencilOperator* L_;
  Grid grid_;
  std::vector<std::size_t> nodes_;
  std::vector<double> potential_;
  std::vector<std::size_t> padded_index_;
  mutable std::vector<double> buffer_;
  int pad_;
  int width_;
};

}  // namespace nlab
