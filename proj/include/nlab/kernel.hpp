#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nlab {

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }

enum class KernelFamily { Indicator, TruncatedFractional, TabulatedRadial };

class MarginalKernel;

/// Radial, nonnegative interaction kernel supported in the open unit ball.
///
/// Three families are available: the indicator of B_1, the truncated
/// fractional kernel |y|^{-2-2s} on B_1, and a radial profile tabulated at
/// increasing radii and interpolated linearly. Every value is multiplied by
/// `normalization`.
class Kernel {
 public:
  static Kernel indicator(double normalization = 1.0);
  static Kernel fractional(double s, double normalization = 1.0);
  /// Samples are (radius, value) with strictly increasing radii in [0, 1]
  /// and last radius exactly 1. Throws InvalidArgument otherwise.
  static Kernel tabulated(std::vector<std::pair<double, double>> samples, double normalization = 1.0);

  KernelFamily family() const { return family_; }
  double s() const { return s_; }
  double normalization() const { return normalization_; }
  const std::vector<std::pair<double, double>>& samples() const { return samples_; }

  /// Radial profile k(r) including the normalization; 0 for r >= 1.
  /// The fractional profile is +inf at r = 0.
  double radial(double r) const;

  /// K(y). The fractional kernel is never evaluated at y = 0 (throws).
  double operator()(Vec2 y) const;

  /// M2 = int_{B_1} |y|^2 K(y) dy.
  double second_moment() const;

  /// int K over the axis-aligned rectangle [a1,b1]x[a2,b2]; the rectangle
  /// must not contain the origin when the kernel is singular.
  double rectangle_integral(double a1, double b1, double a2, double b2) const;

  /// int |y|^2 K(y) over the square [-half, half]^2 centred at the origin.
  double origin_cell_moment(double half) const;

  MarginalKernel marginal() const;

  /// Inverse of parse_kernel_spec for the built-in families.
  std::string spec() const;

 private:
  Kernel(KernelFamily family, double s, double normalization, std::vector<std::pair<double, double>> samples);

  KernelFamily family_;
  double s_ = 0.0;
  double normalization_ = 1.0;
  std::vector<std::pair<double, double>> samples_;
  std::string source_;
  friend Kernel parse_kernel_spec(std::string_view spec);
};

/// K1(t) = int K(t, y2) dy2, the kernel of the operator acting on fields that
/// depend on one coordinate only.
class MarginalKernel {
 public:
  explicit MarginalKernel(Kernel k) : k_(std::move(k)) {}

  double operator()(double t) const;
  /// int_a^b K1(t) dt for 0 < a < b (or a < b < 0).
  double interval_integral(double a, double b) const;
  /// int_{-half}^{half} t^2 K1(t) dt.
  double origin_cell_moment(double half) const;
  /// int t^2 K1(t) dt over (-1, 1).
  double second_moment() const;

  const Kernel& kernel() const { return k_; }

 private:
  Kernel k_;
};

/// Parses `indicator`, `fractional:<s>` or `table:<path>`. A trailing
/// `*<c>` sets the normalization, e.g. `fractional:0.5*2`.
Kernel parse_kernel_spec(std::string_view spec);

/// Reads a `radius value` table, one pair per line; `#` starts a comment.
std::vector<std::pair<double, double>> read_kernel_table(const std::string& path);

}  // namespace nlab
