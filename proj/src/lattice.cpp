#include "nlab/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "nlab/errors.hpp"
#include "nlab/parallel.hpp"

namespace nlab {

namespace {

int nodes_per_half(double h, double S) { return static_cast<int>(std::floor(S / h + 1e-9)); }

void check_spacing(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
  if (h > 0.25 + 1e-15)
    throw InvalidArgument("grid spacing h = " + std::to_string(h) +
                          " is too coarse: the unit interaction radius needs h <= 0.25");
}

}  // namespace

Grid Grid::make(double h, double S) {
  check_spacing(h);
  if (!(S >= 2.0)) throw InvalidArgument("half-width S must be at least 2");
  return Grid{h, S, nodes_per_half(h, S)};
}

Grid1D Grid1D::make(double h, double S) {
  check_spacing(h);
  if (!(S >= 2.0)) throw InvalidArgument("half-width S must be at least 2");
  return Grid1D{h, S, nodes_per_half(h, S)};
}

// ---------------------------------------------------------------- Profile

Profile::Profile(Grid1D grid, double left, double right, std::vector<double> deviation)
    : grid_(grid), left_(left), right_(right), dev_(std::move(deviation)) {
  if (dev_.size() != static_cast<std::size_t>(grid_.n())) throw InvalidArgument("profile size does not match its grid");
}

Split Profile::node(int i) const {
  if (i < -grid_.m) return {left_, 0.0};
  if (i > grid_.m) return {right_, 0.0};
  return {reference(i), dev_[static_cast<std::size_t>(i + grid_.m)]};
}

double Profile::reference_at(double t) const {
  const double eps = 1e-9 * grid_.h;
  if (t > eps) return right_;
  if (t < -eps) return left_;
  return 0.5 * (left_ + right_);
}

Split Profile::at(double t) const {
  const double x = t / grid_.h;
  const double k = std::round(x);
  if (std::abs(x - k) <= 1e-9) return node(static_cast<int>(k));
  const int k0 = static_cast<int>(std::floor(x));
  const double f = x - k0;
  const double w[4] = {-f * (f - 1.0) * (f - 2.0) / 6.0, (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
                       -(f + 1.0) * f * (f - 2.0) / 2.0, (f + 1.0) * f * (f - 1.0) / 6.0};
  const double ref = reference_at(t);
  bool same = true;
  Split s[4];
  for (int q = 0; q < 4; ++q) {
    s[q] = node(k0 - 1 + q);
    same = same && s[q].ref == ref;
  }
  double acc = 0.0;
  if (same) {
    for (int q = 0; q < 4; ++q) acc += w[q] * s[q].dev;
    return {ref, acc};
  }
  for (int q = 0; q < 4; ++q) acc += w[q] * s[q].value();
  return {ref, acc - ref};
}

std::vector<double> Profile::values() const {
  std::vector<double> out(dev_.size());
  for (int i = -grid_.m; i <= grid_.m; ++i) out[static_cast<std::size_t>(i + grid_.m)] = value(i);
  return out;
}

// ---------------------------------------------------------------- Farfield

Farfield Farfield::constant(double v) {
  Farfield f;
  f.kind_ = Kind::Constant;
  f.value_ = v;
  return f;
}

Farfield Farfield::onedim(Vec2 direction, std::shared_ptr<const Profile> profile, std::string source) {
  if (!profile) throw InvalidArgument("one-dimensional farfield needs a profile");
  const double len = std::hypot(direction.x1, direction.x2);
  if (!(len > 0.0)) throw InvalidArgument("farfield direction must be nonzero");
  Farfield f;
  f.kind_ = Kind::OneDim;
  f.direction_ = {direction.x1 / len, direction.x2 / len};
  f.profile_ = std::move(profile);
  f.source_ = std::move(source);
  return f;
}

Farfield Farfield::analytic(std::function<double(Vec2)> fn) {
  Farfield f;
  f.kind_ = Kind::Analytic;
  f.fn_ = std::move(fn);
  return f;
}

double Farfield::reference(const Grid& g, int i, int j) const {
  if (kind_ != Kind::OneDim) return 0.0;
  return profile_->reference_at(dot(g.point(i, j), direction_));
}

Split Farfield::outside(const Grid& g, int i, int j) const {
  switch (kind_) {
    case Kind::None:
      throw FarfieldMissing(i, j);
    case Kind::Constant:
      return {0.0, value_};
    case Kind::OneDim:
      return profile_->at(dot(g.point(i, j), direction_));
    case Kind::Analytic:
      return {0.0, fn_(g.point(i, j))};
  }
  return {};
}

// ---------------------------------------------------------------- Field

Field::Field(const Grid& g, Farfield ff) : grid_(g), farfield_(std::move(ff)), dev_(g.size(), 0.0) {
  rebuild_reference();
}

void Field::rebuild_reference() {
  ref_.clear();
  if (farfield_.kind() != Farfield::Kind::OneDim) return;
  ref_.resize(grid_.size());
  for (std::size_t idx = 0; idx < grid_.size(); ++idx)
    ref_[idx] = farfield_.reference(grid_, grid_.i_of(idx), grid_.j_of(idx));
}

Field Field::from_values(const Grid& g, std::span<const double> values, Farfield ff) {
  if (values.size() != g.size()) throw InvalidArgument("field value count does not match the grid");
  Field f(g, std::move(ff));
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!std::isfinite(values[idx])) throw InvalidArgument("field values must be finite");
    f.dev_[idx] = values[idx] - f.reference(idx);
  }
  return f;
}

Field Field::from_function(const Grid& g, const std::function<double(Vec2)>& fn, Farfield ff) {
  std::vector<double> v(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) v[idx] = fn(g.point(idx));
  return from_values(g, v, std::move(ff));
}

void Field::set_farfield(Farfield ff) {
  const std::vector<double> full = values();
  farfield_ = std::move(ff);
  rebuild_reference();
  for (std::size_t idx = 0; idx < dev_.size(); ++idx) dev_[idx] = full[idx] - reference(idx);
}

Split Field::split(int i, int j) const {
  if (grid_.contains(i, j)) {
    const std::size_t idx = grid_.index(i, j);
    return {reference(idx), dev_[idx]};
  }
  return farfield_.outside(grid_, i, j);
}

std::vector<double> Field::values() const {
  std::vector<double> out(dev_.size());
  for (std::size_t idx = 0; idx < dev_.size(); ++idx) out[idx] = value(idx);
  return out;
}

void Field::fill(double v) {
  for (std::size_t idx = 0; idx < dev_.size(); ++idx) dev_[idx] = v - reference(idx);
}

PaddedField pad_field(const Field& f, int pad) {
  const Grid& g = f.grid();
  PaddedField P;
  P.m = g.m;
  P.pad = pad;
  P.width = g.n() + 2 * pad;
  P.has_ref = f.has_reference() || f.farfield().kind() == Farfield::Kind::OneDim;
  const std::size_t total = static_cast<std::size_t>(P.width) * P.width;
  P.dev.assign(total, 0.0);
  if (P.has_ref) P.ref.assign(total, 0.0);
  const int lo = -g.m - pad, hi = g.m + pad;
  for (int j = lo; j <= hi; ++j) {
    for (int i = lo; i <= hi; ++i) {
      const Split s = f.split(i, j);
      const std::size_t p = P.index(i, j);
      P.dev[p] = s.dev;
      if (P.has_ref) P.ref[p] = s.ref;
    }
  }
  return P;
}

// ---------------------------------------------------------------- stencils

double StencilOperator::weight(Offset o) const {
  for (std::size_t k = 0; k < offsets.size(); ++k)
    if (offsets[k] == o) return weights[k];
  return 0.0;
}

double StencilOperator::second_moment() const {
  double total = 0.0;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double r2 = (double(offsets[k].d1) * offsets[k].d1 + double(offsets[k].d2) * offsets[k].d2) * h * h;
    total += weights[k] * r2;
  }
  return total;
}

StencilOperator build_stencil(const Kernel& k, const Grid& g) { return build_stencil(k, g.h); }

StencilOperator build_stencil(const Kernel& k, double h) {
  check_spacing(h);
  StencilOperator L;
  L.h = h;
  const int reach = static_cast<int>(std::ceil(1.0 / h + 0.5));
  for (int d2 = 0; d2 <= reach; ++d2) {
    for (int d1 = -reach; d1 <= reach; ++d1) {
      if (d2 == 0 && d1 <= 0) continue;
      const double a1 = (d1 - 0.5) * h, b1 = (d1 + 0.5) * h;
      const double a2 = (d2 - 0.5) * h, b2 = (d2 + 0.5) * h;
      const double n1 = std::max({a1, -b1, 0.0}), n2 = std::max({a2, -b2, 0.0});
      if (n1 * n1 + n2 * n2 >= 1.0) continue;
      const double w = k.rectangle_integral(a1, b1, a2, b2);
      if (!(w > 0.0)) continue;
      L.half_offsets.push_back({d1, d2});
      L.half_weights.push_back(w);
    }
  }
  // principal value: the origin cell acts as -(m0/4) times the 5-point Laplacian
  const double fold = k.origin_cell_moment(0.5 * h) / (4.0 * h * h);
  for (std::size_t q = 0; q < L.half_offsets.size(); ++q) {
    const Offset o = L.half_offsets[q];
    if ((o.d1 == 1 && o.d2 == 0) || (o.d1 == 0 && o.d2 == 1)) L.half_weights[q] += fold;
  }
  for (std::size_t q = 0; q < L.half_offsets.size(); ++q) {
    L.offsets.push_back(L.half_offsets[q]);
    L.weights.push_back(L.half_weights[q]);
  }
  for (std::size_t q = 0; q < L.half_offsets.size(); ++q) {
    L.offsets.push_back({-L.half_offsets[q].d1, -L.half_offsets[q].d2});
    L.weights.push_back(L.half_weights[q]);
  }
  for (const Offset& o : L.half_offsets) L.reach = std::max({L.reach, std::abs(o.d1), std::abs(o.d2)});
  for (double w : L.half_weights) L.total_weight += 2.0 * w;
  return L;
}

double Stencil1D::total_weight() const {
  double t = 0.0;
  for (double w : weights) t += 2.0 * w;
  return t;
}

double Stencil1D::second_moment() const {
  double t = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) t += 2.0 * weights[k] * double(k + 1) * double(k + 1) * h * h;
  return t;
}

Stencil1D build_stencil_1d(const MarginalKernel& k1, double h) {
  check_spacing(h);
  Stencil1D L;
  L.h = h;
  const int reach = static_cast<int>(std::ceil(1.0 / h + 0.5));
  for (int k = 1; k <= reach; ++k) L.weights.push_back(k1.interval_integral((k - 0.5) * h, (k + 0.5) * h));
  L.weights[0] += k1.origin_cell_moment(0.5 * h) / (2.0 * h * h);
  while (!L.weights.empty() && !(L.weights.back() > 0.0)) L.weights.pop_back();
  return L;
}

Stencil1D marginal_stencil(const StencilOperator& L, int axis) {
  if (axis != 1 && axis != 2) throw InvalidArgument("axis must be 1 or 2");
  Stencil1D out;
  out.h = L.h;
  out.weights.assign(static_cast<std::size_t>(L.reach), 0.0);
  for (std::size_t q = 0; q < L.offsets.size(); ++q) {
    const int c = axis == 1 ? L.offsets[q].d1 : L.offsets[q].d2;
    if (c > 0) out.weights[static_cast<std::size_t>(c - 1)] += L.weights[q];
  }
  while (!out.weights.empty() && !(out.weights.back() > 0.0)) out.weights.pop_back();
  return out;
}

// ---------------------------------------------------------------- application

Field apply(const StencilOperator& L, const Field& u) {
  const Grid& g = u.grid();
  const PaddedField P = pad_field(u, L.reach);
  Field out(g);
  auto dst = out.deviations();
  std::vector<std::ptrdiff_t> lin(L.half_offsets.size());
  for (std::size_t q = 0; q < lin.size(); ++q)
    lin[q] = static_cast<std::ptrdiff_t>(L.half_offsets[q].d2) * P.width + L.half_offsets[q].d1;
  const std::size_t nq = lin.size();
  parallel_chunks(g.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t idx = b; idx < e; ++idx) {
      const auto p = static_cast<std::ptrdiff_t>(P.index(g.i_of(idx), g.j_of(idx)));
      const double* D = P.dev.data();
      double acc = 0.0;
      if (P.has_ref) {
        const double* R = P.ref.data();
        for (std::size_t q = 0; q < nq; ++q) {
          const std::ptrdiff_t a = p + lin[q], c = p - lin[q];
          acc += L.half_weights[q] * (((R[p] - R[a]) + (D[p] - D[a])) + ((R[p] - R[c]) + (D[p] - D[c])));
        }
      } else {
        for (std::size_t q = 0; q < nq; ++q) {
          const std::ptrdiff_t a = p + lin[q], c = p - lin[q];
          acc += L.half_weights[q] * ((D[p] - D[a]) + (D[p] - D[c]));
        }
      }
      dst[idx] = acc;
    }
  });
  return out;
}

double bilinear_B(const StencilOperator& L, const Field& v, const Field& w) {
  if (!(v.grid() == w.grid())) throw InvalidArgument("bilinear_B: fields live on different grids");
  if (std::abs(v.grid().h - L.h) > 1e-15) throw InvalidArgument("bilinear_B: stencil spacing differs from the grid");
  const Grid& g = v.grid();
  const PaddedField V = pad_field(v, L.reach);
  const PaddedField W = pad_field(w, L.reach);
  std::vector<std::ptrdiff_t> lin(L.half_offsets.size());
  for (std::size_t q = 0; q < lin.size(); ++q)
    lin[q] = static_cast<std::ptrdiff_t>(L.half_offsets[q].d2) * V.width + L.half_offsets[q].d1;
  const double sum = ordered_sum(g.size(), [&](std::size_t idx) {
    const auto p = static_cast<std::ptrdiff_t>(V.index(g.i_of(idx), g.j_of(idx)));
    double acc = 0.0;
    for (std::size_t q = 0; q < lin.size(); ++q) {
      const std::size_t a = static_cast<std::size_t>(p + lin[q]), c = static_cast<std::size_t>(p - lin[q]);
      const auto pp = static_cast<std::size_t>(p);
      const double dva = difference(V.split(pp), V.split(a)), dwa = difference(W.split(pp), W.split(a));
      const double dvc = difference(V.split(pp), V.split(c)), dwc = difference(W.split(pp), W.split(c));
      acc += L.half_weights[q] * (dva * dwa + dvc * dwc);
    }
    return acc;
  });
  return sum * g.h * g.h;
}

double hk_energy(const StencilOperator& L, const Field& w) { return 0.5 * bilinear_B(L, w, w); }

std::vector<double> apply_1d(const Stencil1D& L, const Profile& u) {
  const int m = u.grid().m;
  std::vector<double> out(static_cast<std::size_t>(u.grid().n()));
  for (int i = -m; i <= m; ++i) {
    const Split x = u.node(i);
    double acc = 0.0;
    for (int k = 1; k <= L.reach(); ++k)
      acc += L.weights[static_cast<std::size_t>(k - 1)] * (difference(x, u.node(i + k)) + difference(x, u.node(i - k)));
    out[static_cast<std::size_t>(i + m)] = acc;
  }
  return out;
}

std::vector<std::size_t> ball_nodes(const Grid& g, double R) {
  double r2 = (R / g.h) * (R / g.h);
  if (std::abs(r2 - std::round(r2)) < 1e-6) r2 = std::round(r2);
  std::vector<std::size_t> out;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const double i = g.i_of(idx), j = g.j_of(idx);
    if (i * i + j * j < r2) out.push_back(idx);
  }
  return out;
}

// ---------------------------------------------------------------- MaskedOperator

MaskedOperator::MaskedOperator(const StencilOperator& L, const Grid& g, std::vector<std::size_t> nodes,
                               std::vector<double> potential)
    : L_(&L), grid_(g), nodes_(std::move(nodes)), potential_(std::move(potential)) {
  if (potential_.size() != nodes_.size()) throw InvalidArgument("MaskedOperator: potential size mismatch");
  pad_ = L.reach;
  width_ = g.n() + 2 * pad_;
  buffer_.assign(static_cast<std::size_t>(width_) * width_, 0.0);
  padded_index_.resize(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const int i = g.i_of(nodes_[k]), j = g.j_of(nodes_[k]);
    padded_index_[k] = static_cast<std::size_t>(j + g.m + pad_) * width_ + static_cast<std::size_t>(i + g.m + pad_);
  }
}

void MaskedOperator::apply(std::span<const double> x, std::span<double> y) const {
  const StencilOperator& L = *L_;
  for (std::size_t k = 0; k < nodes_.size(); ++k) buffer_[padded_index_[k]] = x[k];
  std::vector<std::ptrdiff_t> lin(L.half_offsets.size());
  for (std::size_t q = 0; q < lin.size(); ++q)
    lin[q] = static_cast<std::ptrdiff_t>(L.half_offsets[q].d2) * width_ + L.half_offsets[q].d1;
  const double W = L.total_weight;
  const double* B = buffer_.data();
  parallel_chunks(nodes_.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto p = static_cast<std::ptrdiff_t>(padded_index_[k]);
      double acc = 0.0;
      for (std::size_t q = 0; q < lin.size(); ++q) acc += L.half_weights[q] * (B[p + lin[q]] + B[p - lin[q]]);
      y[k] = (W - potential_[k]) * x[k] - acc;
    }
  });
  for (std::size_t k = 0; k < nodes_.size(); ++k) buffer_[padded_index_[k]] = 0.0;
}

}  // namespace nlab
