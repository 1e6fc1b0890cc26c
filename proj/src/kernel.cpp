#include "nlab/kernel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "nlab/errors.hpp"

namespace nlab {

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-13, unsigned depth = 18) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, tol);
}

// area of the unit disc intersected with [0,x] x [0,y], extended oddly in
// each argument
double disc_corner_area(double x, double y) {
  const double sx = x < 0 ? -1.0 : 1.0;
  const double sy = y < 0 ? -1.0 : 1.0;
  x = std::min(std::abs(x), 1.0);
  y = std::min(std::abs(y), 1.0);
  double area;
  if (x * x + y * y <= 1.0) {
    area = x * y;
  } else {
    auto P = [](double s) { return 0.5 * (s * std::sqrt(std::max(0.0, 1.0 - s * s)) + std::asin(s)); };
    const double s_star = std::sqrt(std::max(0.0, 1.0 - y * y));
    area = y * s_star + (P(x) - P(s_star));
  }
  return sx * sy * area;
}

// int_y^inf (x^2 + t^2)^{-1-s} dt for y >= 0. With t = |x| cot(psi) this is
// |x|^{-1-2s} int_0^{psi0} sin^{2s}, an incomplete beta in sin^2(psi0)
// = x^2/(x^2+y^2); no cancellation as x -> 0.
double fractional_tail(double s, double x, double y) {
  x = std::abs(x);
  const double a = s + 0.5;
  if (x == 0.0) return std::pow(y, -2.0 * a) / (2.0 * a);
  const double z = x * x / (x * x + y * y);
  return 0.5 * std::pow(x, -2.0 * a) * boost::math::beta(a, 0.5, z);
}

// int_0^y (x^2 + t^2)^{-1-s} dt for y >= 0, x != 0; t = |x| tan(theta)
double fractional_head(double s, double x, double y) {
  x = std::abs(x);
  return 0.5 * std::pow(x, -1.0 - 2.0 * s) * boost::math::beta(0.5, s + 0.5, y * y / (x * x + y * y));
}

// int_{y0}^{y1} (x^2 + y^2)^{-1-s} dy along a segment avoiding the origin.
// Heads are used near the foot of the perpendicular, tails far from it.
double fractional_column(double s, double x, double y0, double y1) {
  if (y1 <= 0.0) return fractional_column(s, x, -y1, -y0);
  if (y0 < 0.0) return fractional_head(s, x, -y0) + fractional_head(s, x, y1);
  if (y0 >= std::abs(x)) return fractional_tail(s, x, y0) - fractional_tail(s, x, y1);
  return fractional_head(s, x, y1) - fractional_head(s, x, y0);
}

double parse_double(std::string_view text, const char* what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw InvalidArgument(std::string("cannot parse ") + what + ": '" + std::string(text) + "'");
  return v;
}

}  // namespace

Kernel::Kernel(KernelFamily family, double s, double normalization, std::vector<std::pair<double, double>> samples)
    : family_(family), s_(s), normalization_(normalization), samples_(std::move(samples)) {
  if (!(normalization_ > 0.0) || !std::isfinite(normalization_))
    throw InvalidArgument("kernel normalization must be a positive finite number");
}

Kernel Kernel::indicator(double normalization) { return Kernel(KernelFamily::Indicator, 0.0, normalization, {}); }

Kernel Kernel::fractional(double s, double normalization) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("fractional kernel needs s in (0,1)");
  return Kernel(KernelFamily::TruncatedFractional, s, normalization, {});
}

Kernel Kernel::tabulated(std::vector<std::pair<double, double>> samples, double normalization) {
  if (samples.empty()) throw InvalidArgument("kernel table is empty");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto [r, v] = samples[k];
    if (!std::isfinite(r) || !std::isfinite(v)) throw InvalidArgument("kernel table holds a non-finite entry");
    if (r < 0.0 || r > 1.0) throw InvalidArgument("kernel table radius outside [0,1]");
    if (k > 0 && !(r > samples[k - 1].first))
      throw InvalidArgument("kernel table radii must be strictly increasing (row " + std::to_string(k + 1) + ")");
  }
  if (std::abs(samples.back().first - 1.0) > 1e-12) throw InvalidArgument("kernel table must end at radius 1");
  samples.back().first = 1.0;
  return Kernel(KernelFamily::TabulatedRadial, 0.0, normalization, std::move(samples));
}

double Kernel::radial(double r) const {
  if (r >= 1.0) return 0.0;
  switch (family_) {
    case KernelFamily::Indicator:
      return normalization_;
    case KernelFamily::TruncatedFractional:
      if (r == 0.0) return std::numeric_limits<double>::infinity();
      return normalization_ * std::pow(r, -2.0 - 2.0 * s_);
    case KernelFamily::TabulatedRadial: {
      if (r <= samples_.front().first) return normalization_ * std::max(0.0, samples_.front().second);
      auto it = std::lower_bound(samples_.begin(), samples_.end(), r,
                                 [](const auto& p, double x) { return p.first < x; });
      const auto [r1, v1] = *it;
      const auto [r0, v0] = *(it - 1);
      const double v = v0 + (v1 - v0) * (r - r0) / (r1 - r0);
      return normalization_ * std::max(0.0, v);
    }
  }
  return 0.0;
}

double Kernel::operator()(Vec2 y) const {
  const double r = std::hypot(y.x1, y.x2);
  if (r == 0.0 && family_ == KernelFamily::TruncatedFractional)
    throw InvalidArgument("the fractional kernel is singular at y = 0");
  return radial(r);
}

double Kernel::second_moment() const {
  switch (family_) {
    case KernelFamily::Indicator:
      return normalization_ * kPi / 2.0;
    case KernelFamily::TruncatedFractional:
      return normalization_ * 2.0 * kPi / (2.0 - 2.0 * s_);
    case KernelFamily::TabulatedRadial: {
      double total = 0.0;
      auto g = [this](double r) { return r * r * r * radial(r); };
      total += integrate(g, 0.0, samples_.front().first);
      for (std::size_t k = 1; k < samples_.size(); ++k) total += integrate(g, samples_[k - 1].first, samples_[k].first);
      total *= 2.0 * kPi;
      if (!std::isfinite(total)) throw InvalidArgument("kernel second moment diverges numerically");
      return total;
    }
  }
  return 0.0;
}

double Kernel::rectangle_integral(double a1, double b1, double a2, double b2) const {
  if (family_ == KernelFamily::Indicator) {
    return normalization_ *
           (disc_corner_area(b1, b2) - disc_corner_area(a1, b2) - disc_corner_area(b1, a2) + disc_corner_area(a1, a2));
  }
  const double lo = std::max(a1, -1.0);
  const double hi = std::min(b1, 1.0);
  auto column = [&](double x) {
    const double c = std::sqrt(std::max(0.0, 1.0 - x * x));
    const double ylo = std::max(a2, -c);
    const double yhi = std::min(b2, c);
    if (!(yhi > ylo)) return 0.0;
    if (family_ == KernelFamily::TruncatedFractional) return normalization_ * fractional_column(s_, x, ylo, yhi);
    return integrate([&](double y) { return radial(std::hypot(x, y)); }, ylo, yhi, 1e-11, 10);
  };
  // split the outer range where the disc boundary enters the rectangle
  std::vector<double> cuts{lo, hi};
  for (double y : {a2, b2}) {
    if (std::abs(y) < 1.0) {
      const double c = std::sqrt(1.0 - y * y);
      for (double x : {-c, c})
        if (x > lo && x < hi) cuts.push_back(x);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    const double p = cuts[k - 1], q = cuts[k];
    // the column length vanishes like sqrt(1 - |x|) at x = +-1
    if (q == 1.0) {
      total += integrate([&](double u) { return 2.0 * u * column(1.0 - u * u); }, 0.0, std::sqrt(1.0 - p), 1e-11, 15);
    } else if (p == -1.0) {
      total += integrate([&](double u) { return 2.0 * u * column(-1.0 + u * u); }, 0.0, std::sqrt(1.0 + q), 1e-11, 15);
    } else {
      total += integrate(column, p, q, 1e-11, 15);
    }
  }
  return total;
}

double Kernel::origin_cell_moment(double half) const {
  switch (family_) {
    case KernelFamily::Indicator:
      return normalization_ * 8.0 * std::pow(half, 4) / 3.0;
    case KernelFamily::TruncatedFractional: {
      const double p = 2.0 - 2.0 * s_;
      auto g = [&](double th) { return std::pow(half / std::cos(th), p) / p; };
      return normalization_ * 8.0 * integrate(g, 0.0, kPi / 4.0);
    }
    case KernelFamily::TabulatedRadial: {
      auto g = [&](double th) {
        const double rho = std::min(1.0, half / std::cos(th));
        return integrate([&](double r) { return r * r * r * radial(r); }, 0.0, rho, 1e-12, 12);
      };
      return 8.0 * integrate(g, 0.0, kPi / 4.0);
    }
  }
  return 0.0;
}

MarginalKernel Kernel::marginal() const { return MarginalKernel(*this); }

std::string Kernel::spec() const {
  std::ostringstream os;
  switch (family_) {
    case KernelFamily::Indicator:
      os << "indicator";
      break;
    case KernelFamily::TruncatedFractional:
      os << "fractional:" << s_;
      break;
    case KernelFamily::TabulatedRadial:
      os << "table:" << (source_.empty() ? "<inline>" : source_);
      break;
  }
  if (normalization_ != 1.0) os << "*" << normalization_;
  return os.str();
}

double MarginalKernel::operator()(double t) const {
  const double a = std::abs(t);
  if (a >= 1.0) return 0.0;
  const double c = k_.normalization();
  switch (k_.family()) {
    case KernelFamily::Indicator:
      return c * 2.0 * std::sqrt(1.0 - a * a);
    case KernelFamily::TruncatedFractional: {
      if (a == 0.0) return std::numeric_limits<double>::infinity();
      // y = |t| tan(theta) gives int_0^{acos |t|} cos^{2s}, an incomplete beta
      const double s = k_.s();
      const double inner = 0.5 * boost::math::beta(0.5, s + 0.5, 1.0 - a * a);
      return c * 2.0 * std::pow(a, -1.0 - 2.0 * s) * inner;
    }
    case KernelFamily::TabulatedRadial: {
      const double top = std::sqrt(1.0 - a * a);
      return 2.0 * integrate([&](double y) { return k_.radial(std::hypot(a, y)); }, 0.0, top, 1e-12, 14);
    }
  }
  return 0.0;
}

double MarginalKernel::interval_integral(double a, double b) const {
  a = std::max(a, -1.0);
  b = std::min(b, 1.0);
  if (!(b > a)) return 0.0;
  if (k_.family() == KernelFamily::Indicator) {
    auto F = [](double t) { return t * std::sqrt(std::max(0.0, 1.0 - t * t)) + std::asin(t); };
    return k_.normalization() * (F(b) - F(a));
  }
  return integrate([&](double t) { return (*this)(t); }, a, b, 1e-12, 14);
}

double MarginalKernel::origin_cell_moment(double half) const {
  half = std::min(half, 1.0);
  if (k_.family() == KernelFamily::Indicator) {
    // 2 int_0^half 2 t^2 sqrt(1-t^2) dt
    auto G = [](double t) {
      return 0.25 * (std::asin(t) - t * std::sqrt(std::max(0.0, 1.0 - t * t)) * (1.0 - 2.0 * t * t));
    };
    return k_.normalization() * 2.0 * (G(half) - G(0.0));
  }
  if (k_.family() == KernelFamily::TruncatedFractional) {
    // t^2 K1(t) ~ t^{1-2s}; t = half * v^q with q = 1/(2-2s) removes the endpoint singularity
    const double q = 1.0 / (2.0 - 2.0 * k_.s());
    auto g = [&](double v) {
      if (v == 0.0) return 0.0;
      const double t = half * std::pow(v, q);
      return t * t * (*this)(t) * half * q * std::pow(v, q - 1.0);
    };
    return 2.0 * integrate(g, 0.0, 1.0, 1e-12, 14);
  }
  return 2.0 * integrate([&](double t) { return t * t * (*this)(t); }, 0.0, half, 1e-12, 14);
}

double MarginalKernel::second_moment() const { return origin_cell_moment(1.0); }

std::vector<std::pair<double, double>> read_kernel_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kernel table '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    if (!(ls >> b) || (ls >> extra))
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected 'radius value'");
    rows.emplace_back(parse_double(a, "radius"), parse_double(b, "value"));
  }
  return rows;
}

Kernel parse_kernel_spec(std::string_view spec) {
  double normalization = 1.0;
  if (auto star = spec.rfind('*'); star != std::string_view::npos) {
    normalization = parse_double(spec.substr(star + 1), "kernel normalization");
    spec = spec.substr(0, star);
  }
  if (spec == "indicator") return Kernel::indicator(normalization);
  if (spec.starts_with("fractional:"))
    return Kernel::fractional(parse_double(spec.substr(11), "fractional exponent"), normalization);
  if (spec.starts_with("table:")) {
    const std::string path(spec.substr(6));
    Kernel k = Kernel::tabulated(read_kernel_table(path), normalization);
    k.source_ = path;
    return k;
  }
  throw InvalidArgument("unknown kernel spec '" + std::string(spec) + "'");
}

}  // namespace nlab
