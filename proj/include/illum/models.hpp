#pragma once

// Learned systems: feed-forward networks and polynomial regressors, each with
// exact point evaluation and a sound box image.
//
// Soundness against floating point: a model's point evaluation and its image
// computation run the same sequence of roundings, and every step (a*x with
// fixed a, s+t, x*y for fixed sign of the other factor) is monotone under
// round-to-nearest. So a computed point value can never escape the interval
// computed at the extreme vertices. Only libm transcendentals (tanh, exp) are
// widened by one ulp.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "illum/core.hpp"

namespace illum {

class LearnedSystem {
 public:
  virtual ~LearnedSystem() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual std::vector<double> evaluate(const std::vector<double>& x) const = 0;
  /// Sound over-approximation of the image of the box `in` (one interval per input).
  virtual std::vector<Interval> image(const std::vector<Interval>& in) const = 0;
};

// ---------------------------------------------------------------------------
// Activations

enum class Activation { Identity, Relu, Tanh, Sigmoid };

inline double activate(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

inline Interval activate(Activation a, Interval v) {
  double lo = activate(a, v.lo), hi = activate(a, v.hi);
  if (a == Activation::Tanh) {
    lo = std::max(-1.0, std::nextafter(lo, -2.0));
    hi = std::min(1.0, std::nextafter(hi, 2.0));
  } else if (a == Activation::Sigmoid) {
    lo = std::max(0.0, std::nextafter(lo, -1.0));
    hi = std::min(1.0, std::nextafter(hi, 2.0));
  }
  return {lo, hi};
}

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity" || s == "linear") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw Error("unknown activation '" + s + "'");
}

// beta + sum_i w_i * coord(i), accumulated left to right.
template <class Coord>
double unit_linear(const std::vector<double>& w, double beta, Coord&& coord) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * coord(i);
  return s + beta;
}

/// Image of one unit rho(<w,x> + beta) over a box: rho applied at the argmin
/// and argmax vertices of the linear part (zero weights take the upper bound
/// for the argmin, matching the vertex formulas).
inline Interval unit_box_image(const std::vector<double>& w, double beta, Activation rho,
                               const std::vector<Interval>& b) {
  if (w.size() != b.size()) throw Error("unit_box_image: dimension mismatch");
  double lo = unit_linear(w, beta, [&](std::size_t i) { return w[i] > 0.0 ? b[i].lo : b[i].hi; });
  double hi = unit_linear(w, beta, [&](std::size_t i) { return w[i] > 0.0 ? b[i].hi : b[i].lo; });
  return activate(rho, Interval{lo, hi});
}

struct Layer {
  std::vector<std::vector<double>> weights;  // rows = units
  std::vector<double> bias;
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weights.empty() ? 0 : weights.front().size(); }
  std::size_t out_dim() const { return weights.size(); }
};

/// Per-output scale (>= 0), offset, then clip. Coordinatewise non-decreasing,
/// so the image of a box is spanned by the images of its two extreme corners.
struct MonotonePostprocess {
  std::vector<double> scale;
  std::vector<double> offset;
  std::vector<double> clip_lo;
  std::vector<double> clip_hi;

  static MonotonePostprocess identity(std::size_t n) {
    double inf = std::numeric_limits<double>::infinity();
    return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), std::vector<double>(n, -inf),
            std::vector<double>(n, inf)};
  }

  void validate(std::size_t n) const {
    if (scale.size() != n || offset.size() != n || clip_lo.size() != n || clip_hi.size() != n)
      throw Error("postprocess: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(scale[i] >= 0.0)) throw Error("postprocess: scale must be non-negative");
      if (clip_lo[i] > clip_hi[i]) throw Error("postprocess: clip_lo exceeds clip_hi");
    }
  }

  double apply(std::size_t i, double v) const {
    return std::clamp(scale[i] * v + offset[i], clip_lo[i], clip_hi[i]);
  }
};

inline std::vector<Interval> monotone_postprocess_box(const MonotonePostprocess& f, const std::vector<Interval>& b) {
  std::vector<Interval> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = {f.apply(i, b[i].lo), f.apply(i, b[i].hi)};
  return out;
}

class FeedForwardNetwork : public LearnedSystem {
 public:
  FeedForwardNetwork() = default;
  explicit FeedForwardNetwork(std::vector<Layer> layers, std::optional<MonotonePostprocess> post = std::nullopt)
      : layers_(std::move(layers)), post_(std::move(post)) {
    if (layers_.empty()) throw Error("network: no layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      if (L.weights.empty()) throw Error("network: layer " + std::to_string(l) + " has no units");
      if (L.bias.size() != L.weights.size()) throw Error("network: bias size mismatch in layer " + std::to_string(l));
      for (const auto& row : L.weights) {
        if (row.size() != L.in_dim()) throw Error("network: ragged weight matrix in layer " + std::to_string(l));
        for (double w : row)
          if (!std::isfinite(w)) throw Error("network: non-finite weight");
      }
      if (l > 0 && L.in_dim() != layers_[l - 1].out_dim())
        throw Error("network: dimension chain broken at layer " + std::to_string(l));
    }
    if (post_) post_->validate(output_dim());
  }

  std::size_t input_dim() const override { return layers_.front().in_dim(); }
  std::size_t output_dim() const override { return layers_.back().out_dim(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::optional<MonotonePostprocess>& postprocess() const { return post_; }

  std::vector<double> evaluate(const std::vector<double>& x) const override {
    if (x.size() != input_dim()) throw Error("network: input dimension mismatch");
    std::vector<double> cur = x, next;
    for (const auto& L : layers_) {
      next.resize(L.out_dim());
      for (std::size_t u = 0; u < L.out_dim(); ++u)
        next[u] = activate(L.activation, unit_linear(L.weights[u], L.bias[u], [&](std::size_t i) { return cur[i]; }));
      cur.swap(next);
    }
    if (post_)
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = post_->apply(i, cur[i]);
    return cur;
  }

  std::vector<Interval> image(const std::vector<Interval>& in) const override {
    if (in.size() != input_dim()) throw Error("network: input box dimension mismatch");
    std::vector<Interval> cur = in, next;
    for (const auto& L : layers_) {
      next.resize(L.out_dim());
      for (std::size_t u = 0; u < L.out_dim(); ++u) next[u] = unit_box_image(L.weights[u], L.bias[u], L.activation, cur);
      cur.swap(next);
    }
    if (post_) cur = monotone_postprocess_box(*post_, cur);
    return cur;
  }

 private:
  std::vector<Layer> layers_;
  std::optional<MonotonePostprocess> post_;
};

// ---------------------------------------------------------------------------
// Polynomials

/// Exponent tuples of every monomial of total degree <= `degree` in `n`
/// variables. Order: constant first, then by total degree; within a degree,
/// descending lexicographic on the exponent tuple (x0^2, x0 x1, x1^2, ...).
inline std::vector<std::vector<int>> monomial_basis(std::size_t n, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(n, 0);
  for (int d = 0; d <= degree; ++d) {
    // recursive fill of exponents summing to d, largest first
    auto rec = [&](auto& self, std::size_t i, int left) -> void {
      if (i + 1 == n) {
        e[i] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[i] = k;
        self(self, i + 1, left - k);
      }
    };
    if (n == 0) {
      if (d == 0) out.emplace_back();
      continue;
    }
    rec(rec, 0, d);
  }
  return out;
}

inline Interval interval_mul(Interval a, Interval b) {
  double p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

// z^k by repeated multiplication; the interval version mirrors the chain.
inline double power_chain(double z, int k) {
  double p = 1.0;
  for (int i = 0; i < k; ++i) p = p * z;
  return p;
}

inline Interval interval_power(Interval z, int k, bool tight_even) {
  if (k == 0) return {1.0, 1.0};
  if (tight_even && k % 2 == 0) {
    double a = std::fabs(z.lo), b = std::fabs(z.hi);
    double mn = (z.lo <= 0.0 && z.hi >= 0.0) ? 0.0 : std::min(a, b);
    return {power_chain(mn, k), power_chain(std::max(a, b), k)};
  }
  if (z.lo >= 0.0) return {power_chain(z.lo, k), power_chain(z.hi, k)};
  Interval p{1.0, 1.0};
  for (int i = 0; i < k; ++i) p = interval_mul(p, z);
  return p;
}

class PolynomialModel : public LearnedSystem {
 public:
  PolynomialModel() = default;
  PolynomialModel(int degree, std::vector<double> norm_min, std::vector<double> norm_max,
                  std::vector<std::vector<double>> coefficients, bool tight_even_powers = true)
      : degree_(degree),
        norm_min_(std::move(norm_min)),
        norm_max_(std::move(norm_max)),
        coef_(std::move(coefficients)),
        tight_(tight_even_powers) {
    if (degree_ < 1) throw Error("polynomial: degree must be >= 1");
    if (norm_min_.size() != norm_max_.size() || norm_min_.empty()) throw Error("polynomial: normalization size mismatch");
    for (std::size_t i = 0; i < norm_min_.size(); ++i)
      if (!(norm_min_[i] < norm_max_[i])) throw Error("polynomial: normalization requires min < max");
    basis_ = monomial_basis(norm_min_.size(), degree_);
    if (coef_.empty()) throw Error("polynomial: no outputs");
    for (const auto& row : coef_)
      if (row.size() != basis_.size())
        throw Error("polynomial: expected " + std::to_string(basis_.size()) + " coefficients per output");
  }

  std::size_t input_dim() const override { return norm_min_.size(); }
  std::size_t output_dim() const override { return coef_.size(); }
  int degree() const { return degree_; }
  const std::vector<double>& norm_min() const { return norm_min_; }
  const std::vector<double>& norm_max() const { return norm_max_; }
  const std::vector<std::vector<double>>& coefficients() const { return coef_; }
  const std::vector<std::vector<int>>& basis() const { return basis_; }
  bool tight_even_powers() const { return tight_; }
  void set_tight_even_powers(bool on) { tight_ = on; }

  double normalize(std::size_t i, double x) const { return (x - norm_min_[i]) / (norm_max_[i] - norm_min_[i]); }

  /// Monomial values at an already-normalized point.
  std::vector<double> features(const std::vector<double>& z) const {
    std::vector<double> f(basis_.size());
    for (std::size_t m = 0; m < basis_.size(); ++m) {
      double prod = 1.0;
      for (std::size_t v = 0; v < z.size(); ++v)
        if (basis_[m][v] != 0) prod = prod * power_chain(z[v], basis_[m][v]);
      f[m] = prod;
    }
    return f;
  }

  std::vector<double> evaluate(const std::vector<double>& x) const override {
    if (x.size() != input_dim()) throw Error("polynomial: input dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = normalize(i, x[i]);
    auto f = features(z);
    std::vector<double> y(coef_.size());
    for (std::size_t j = 0; j < coef_.size(); ++j) {
      double s = 0.0;
      for (std::size_t m = 0; m < f.size(); ++m) s += coef_[j][m] * f[m];
      y[j] = s;
    }
    return y;
  }

  std::vector<Interval> image(const std::vector<Interval>& in) const override {
    if (in.size() != input_dim()) throw Error("polynomial: input box dimension mismatch");
    std::vector<Interval> z(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) z[i] = {normalize(i, in[i].lo), normalize(i, in[i].hi)};
    std::vector<Interval> f(basis_.size());
    for (std::size_t m = 0; m < basis_.size(); ++m) {
      Interval prod{1.0, 1.0};
      for (std::size_t v = 0; v < z.size(); ++v)
        if (basis_[m][v] != 0) prod = interval_mul(prod, interval_power(z[v], basis_[m][v], tight_));
      f[m] = prod;
    }
    std::vector<Interval> y(coef_.size());
    for (std::size_t j = 0; j < coef_.size(); ++j) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t m = 0; m < f.size(); ++m) {
        double c = coef_[j][m];
        lo += c >= 0.0 ? c * f[m].lo : c * f[m].hi;
        hi += c >= 0.0 ? c * f[m].hi : c * f[m].lo;
      }
      y[j] = {lo, hi};
    }
    return y;
  }

 private:
  int degree_ = 1;
  std::vector<double> norm_min_, norm_max_;
  std::vector<std::vector<double>> coef_;
  std::vector<std::vector<int>> basis_;
  bool tight_ = true;
};

// ---------------------------------------------------------------------------

/// A learned system wired to a Space: model input i is the i-th entry of
/// `inputs`, model output j the j-th entry of `outputs`.
class BoundModel {
 public:
  BoundModel() = default;
  BoundModel(std::shared_ptr<const LearnedSystem> sys, std::vector<VarIndex> inputs, std::vector<VarIndex> outputs)
      : sys_(std::move(sys)), in_(std::move(inputs)), out_(std::move(outputs)) {
    if (!sys_) throw Error("bound model: null system");
    if (in_.size() != sys_->input_dim()) throw Error("bound model: input arity mismatch");
    if (out_.size() != sys_->output_dim()) throw Error("bound model: output arity mismatch");
  }

  /// Binds by declaration order of the space's input and output variables.
  static BoundModel by_role(std::shared_ptr<const LearnedSystem> sys, const Space& space) {
    return BoundModel(std::move(sys), space.inputs(), space.outputs());
  }

  const LearnedSystem& system() const { return *sys_; }
  std::shared_ptr<const LearnedSystem> shared() const { return sys_; }
  const std::vector<VarIndex>& inputs() const { return in_; }
  const std::vector<VarIndex>& outputs() const { return out_; }
  explicit operator bool() const { return static_cast<bool>(sys_); }

  /// Fills the output coordinates of `p` from its input coordinates.
  void complete(Point& p) const {
    std::vector<double> x(in_.size());
    for (std::size_t i = 0; i < in_.size(); ++i) x[i] = p.at(in_[i]);
    auto y = sys_->evaluate(x);
    for (std::size_t j = 0; j < out_.size(); ++j) p.at(out_[j]) = y[j];
  }

  /// Output box (over the output variables) containing the image of `in`.
  Box box_image(const Box& in) const {
    std::vector<Interval> iv(in_.size());
    for (std::size_t i = 0; i < in_.size(); ++i) {
      const Interval* a = in.find(in_[i]);
      if (a == nullptr) throw Error("box_image: input box lacks a model input variable");
      iv[i] = *a;
    }
    return Box(out_, sys_->image(iv));
  }

 private:
  std::shared_ptr<const LearnedSystem> sys_;
  std::vector<VarIndex> in_, out_;
};

}  // namespace illum
