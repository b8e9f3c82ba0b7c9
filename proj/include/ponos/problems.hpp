#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ponos/errors.hpp"
#include "ponos/linalg.hpp"
#include "ponos/rng.hpp"
#include "ponos/vec.hpp"

namespace ponos {

using IndexSpan = std::span<const std::size_t>;

struct BatchEval {
  double value = 0.0;
  Vector grad;
};

// Finite-sum objective f(w) = (1/M) sum_i f_i(w) with mini-batch oracles.
// Subclasses provide the per-sample value and fused value+gradient; the base
// class averages them over index sets (pairwise summation for the values).
//
// Oracles are pure in (w, idx): no call mutates the problem, so concurrent
// read-only evaluation is safe.
class Problem {
 public:
  virtual ~Problem() = default;

  std::size_t sample_count() const { return sample_count_; }
  std::size_t dim() const { return dim_; }
  double f_star() const { return f_star_; }
  std::optional<double> lipschitz_max() const { return lipschitz_max_; }
  std::optional<double> strong_convexity() const { return strong_convexity_; }
  bool interpolating() const { return !witness_.empty(); }

  // Common minimizer of every f_i, stored by the interpolating generators.
  const Vector& witness() const {
    if (witness_.empty()) throw MissingMetadata("problem stores no interpolation witness");
    return witness_;
  }

  virtual double per_sample_value(std::span<const double> w, std::size_t i) const = 0;

  // Adds coeff * grad f_i(w) into g and returns f_i(w); one pass per sample.
  virtual double per_sample_value_grad(std::span<const double> w, std::size_t i, double coeff,
                                       std::span<double> g) const = 0;

  // f_{i_k}(w): mean of the per-sample losses over idx.
  double value(std::span<const double> w, IndexSpan idx) const {
    check_batch(w, idx);
    std::vector<double> vals(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) vals[j] = per_sample_value(w, idx[j]);
    return pairwise_sum(vals) / static_cast<double>(idx.size());
  }

  // (f_{i_k}(w), grad f_{i_k}(w)), both averaged over idx, in one pass over
  // the batch. When per_sample is given it receives the individual losses
  // (consumed by the single-batch Grippo table at no extra cost).
  BatchEval value_grad(std::span<const double> w, IndexSpan idx,
                       std::vector<double>* per_sample = nullptr) const {
    check_batch(w, idx);
    BatchEval out;
    out.grad.assign(dim_, 0.0);
    const double coeff = 1.0 / static_cast<double>(idx.size());
    std::vector<double> vals(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
      vals[j] = per_sample_value_grad(w, idx[j], coeff, out.grad);
    out.value = pairwise_sum(vals) / static_cast<double>(idx.size());
    if (per_sample) *per_sample = std::move(vals);
    return out;
  }

  Vector gradient(std::span<const double> w, IndexSpan idx) const {
    return value_grad(w, idx).grad;
  }

  double full_value(std::span<const double> w) const { return value(w, full_index_set()); }

  IndexSpan full_index_set() const { return all_indices_; }

  // Fraction of held-out samples classified correctly; nullopt when the
  // problem carries no test split.
  virtual std::optional<double> test_accuracy(std::span<const double>) const {
    return std::nullopt;
  }

  virtual Vector initial_point(Rng& rng) const {
    Vector w(dim_);
    for (double& x : w) x = rng.normal();
    return w;
  }

 protected:
  Problem(std::size_t sample_count, std::size_t dim)
      : sample_count_(sample_count), dim_(dim), all_indices_(sample_count) {
    std::iota(all_indices_.begin(), all_indices_.end(), std::size_t{0});
  }

  void check_batch(std::span<const double> w, IndexSpan idx) const {
    if (idx.empty()) throw EmptyBatch();
    if (w.size() != dim_) throw DimensionMismatch(w.size(), dim_);
  }

  std::size_t sample_count_;
  std::size_t dim_;
  double f_star_ = 0.0;
  std::optional<double> lipschitz_max_;
  std::optional<double> strong_convexity_;
  Vector witness_;

 private:
  std::vector<std::size_t> all_indices_;
};

// ---------------------------------------------------------------------------
// Mini-batch schedule
// ---------------------------------------------------------------------------

enum class SampleOrder { shuffled_epoch, uniform };

// Deterministic random access: batch(k) depends only on (seed, order, k).
// Shuffled-epoch mode partitions {0..M-1} into ceil(M/b) disjoint batches per
// epoch (last batch may be short); uniform mode draws b indices with
// replacement. Single-owner: the permutation cache is not synchronized.
class MiniBatchSchedule {
 public:
  MiniBatchSchedule(std::size_t sample_count, std::size_t batch_size, SampleOrder order,
                    std::uint64_t seed)
      : sample_count_(sample_count),
        batch_size_(std::min(std::max<std::size_t>(batch_size, 1), sample_count)),
        order_(order),
        seed_(seed) {}

  std::size_t sample_count() const { return sample_count_; }
  std::size_t batch_size() const { return batch_size_; }
  SampleOrder order() const { return order_; }

  std::size_t iterations_per_epoch() const {
    return (sample_count_ + batch_size_ - 1) / batch_size_;
  }

  std::vector<std::size_t> batch(std::size_t k) const {
    if (order_ == SampleOrder::uniform) {
      Rng rng = Rng::substream(seed_, 0x7563 ^ (k * 2 + 1));
      std::vector<std::size_t> idx(batch_size_);
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(sample_count_));
      return idx;
    }
    const std::size_t per_epoch = iterations_per_epoch();
    const std::size_t epoch = k / per_epoch;
    const std::size_t slot = k % per_epoch;
    if (epoch != cached_epoch_ || permutation_.empty()) {
      permutation_.resize(sample_count_);
      std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
      Rng rng = Rng::substream(seed_, 0x5468 ^ epoch);
      rng.shuffle(std::span<std::size_t>(permutation_));
      cached_epoch_ = epoch;
    }
    const std::size_t begin = slot * batch_size_;
    const std::size_t end = std::min(begin + batch_size_, sample_count_);
    return std::vector<std::size_t>(permutation_.begin() + begin, permutation_.begin() + end);
  }

 private:
  std::size_t sample_count_;
  std::size_t batch_size_;
  SampleOrder order_;
  std::uint64_t seed_;
  mutable std::vector<std::size_t> permutation_;
  mutable std::size_t cached_epoch_ = static_cast<std::size_t>(-1);
};

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

// f_i(w) = 1/2 (x_i^T w - y_i)^2, rows stored dense row-major.
class LeastSquaresProblem : public Problem {
 public:
  LeastSquaresProblem(std::vector<double> rows, Vector targets, std::size_t dim)
      : Problem(targets.size(), dim), rows_(std::move(rows)), targets_(std::move(targets)) {
    double l_max = 0.0;
    for (std::size_t i = 0; i < sample_count_; ++i)
      l_max = std::max(l_max, squared_norm(row(i)));
    lipschitz_max_ = l_max;
  }

  double per_sample_value(std::span<const double> w, std::size_t i) const override {
    const double r = dot(row(i), w) - targets_[i];
    return 0.5 * r * r;
  }

  double per_sample_value_grad(std::span<const double> w, std::size_t i, double coeff,
                               std::span<double> g) const override {
    const auto x = row(i);
    const double r = dot(x, w) - targets_[i];
    axpy(coeff * r, x, g);
    return 0.5 * r * r;
  }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(rows_).subspan(i * dim_, dim_);
  }

  void set_witness(Vector w) { witness_ = std::move(w); }
  void set_strong_convexity(double mu) { strong_convexity_ = mu; }

 private:
  std::vector<double> rows_;
  Vector targets_;
};

namespace detail {

// Modified Gram-Schmidt on the columns of a row-major samples x dim block.
// Gaussian input makes a vanishing pivot a rank-deficiency signal.
inline void orthonormalize_columns(std::vector<double>& a, std::size_t rows, std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0.0;
      for (std::size_t i = 0; i < rows; ++i) proj += a[i * cols + p] * a[i * cols + j];
      for (std::size_t i = 0; i < rows; ++i) a[i * cols + j] -= proj * a[i * cols + p];
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < rows; ++i) nrm += a[i * cols + j] * a[i * cols + j];
    nrm = std::sqrt(nrm);
    if (!(nrm > 1e-8)) throw RankDeficient("degenerate column during generation");
    for (std::size_t i = 0; i < rows; ++i) a[i * cols + j] /= nrm;
  }
}

inline void orthonormalize_rows(std::vector<double>& a, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* cur = &a[i * cols];
    for (std::size_t p = 0; p < i; ++p) {
      const double* prev = &a[p * cols];
      double proj = 0.0;
      for (std::size_t j = 0; j < cols; ++j) proj += prev[j] * cur[j];
      for (std::size_t j = 0; j < cols; ++j) cur[j] -= proj * prev[j];
    }
    double nrm = 0.0;
    for (std::size_t j = 0; j < cols; ++j) nrm += cur[j] * cur[j];
    nrm = std::sqrt(nrm);
    if (!(nrm > 1e-8)) throw RankDeficient("degenerate row during generation");
    for (std::size_t j = 0; j < cols; ++j) cur[j] /= nrm;
  }
}

}  // namespace detail

// Generates an interpolating least-squares instance: rows x_i, a witness w*
// and the consistent targets y_i = x_i^T w*, so every per-sample loss is
// exactly zero at the witness. The design is an orthonormalized Gaussian
// frame scaled by a geometric spectrum, so cond(X^T X) equals
// condition_target (default 1: perfectly conditioned). lipschitz_target > 0
// rescales the instance so that max_i ||x_i||^2 equals it, which positions
// the per-sample smoothness constants relative to the step-size cap. For
// M >= n the generator also computes mu = lambda_min(X^T X)/M and verifies
// full column rank.
inline std::shared_ptr<LeastSquaresProblem> make_interpolating_least_squares(
    std::uint64_t seed, std::size_t samples, std::size_t dim, double condition_target = 1.0,
    double lipschitz_target = 0.0) {
  if (!(condition_target >= 1.0))
    throw ValidationError("cond", "condition target must be >= 1");
  Rng rng = Rng::substream(seed, 0x15F1);
  std::vector<double> rows(samples * dim);
  for (double& x : rows) x = rng.normal();

  if (samples >= dim) {
    // X = sqrt(M) Q D with orthonormal columns: X^T X / M = D^2 exactly.
    detail::orthonormalize_columns(rows, samples, dim);
    const double root_m = std::sqrt(static_cast<double>(samples));
    for (std::size_t j = 0; j < dim; ++j) {
      const double spread =
          dim > 1 ? std::pow(condition_target,
                             -0.5 * static_cast<double>(j) / static_cast<double>(dim - 1))
                  : 1.0;
      for (std::size_t i = 0; i < samples; ++i) rows[i * dim + j] *= root_m * spread;
    }
  } else {
    // Underdetermined (convex-only) regime: orthonormal rows scaled to the
    // same geometric spread.
    detail::orthonormalize_rows(rows, samples, dim);
    const double root_n = std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < samples; ++i) {
      const double spread =
          samples > 1 ? std::pow(condition_target,
                                 -0.5 * static_cast<double>(i) / static_cast<double>(samples - 1))
                      : 1.0;
      for (std::size_t j = 0; j < dim; ++j) rows[i * dim + j] *= root_n * spread;
    }
  }

  if (lipschitz_target > 0.0) {
    double max_row = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      double nrm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) nrm += rows[i * dim + j] * rows[i * dim + j];
      max_row = std::max(max_row, nrm);
    }
    const double alpha = std::sqrt(lipschitz_target / max_row);
    for (double& x : rows) x *= alpha;
  }

  Vector witness(dim);
  for (double& x : witness) x = rng.normal();
  Vector targets(samples);
  // Same dot-product routine and order as the evaluation path, so the
  // per-sample residuals at the witness are bitwise zero.
  for (std::size_t i = 0; i < samples; ++i)
    targets[i] = dot(std::span<const double>(rows).subspan(i * dim, dim), witness);

  auto problem = std::make_shared<LeastSquaresProblem>(std::move(rows), std::move(targets), dim);
  problem->set_witness(std::move(witness));

  if (samples >= dim) {
    std::vector<double> gram(dim * dim, 0.0);
    for (std::size_t i = 0; i < samples; ++i) {
      const auto x = problem->row(i);
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) gram[a * dim + b] += x[a] * x[b];
    }
    for (double& v : gram) v /= static_cast<double>(samples);
    const auto eig = symmetric_eigenvalues(gram, dim);
    const double lambda_min = eig.front();
    const double lambda_max = eig.back();
    if (!(lambda_min > 1e-12 * lambda_max))
      throw RankDeficient("generated design matrix is numerically rank deficient");
    problem->set_strong_convexity(lambda_min);
  }
  return problem;
}

// ---------------------------------------------------------------------------
// RBF-kernel logistic regression
// ---------------------------------------------------------------------------

inline double rbf_kernel(std::span<const double> x, std::span<const double> z, double bandwidth) {
  return std::exp(-squared_distance(x, z) / (2.0 * bandwidth * bandwidth));
}

// Numerically stable log(1 + exp(x)).
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Unregularized kernel logistic loss f_i(w) = log(1 + exp(-y_i K_i^T w)) on
// the Gram feature map; one weight per training center. f* is taken as 0.
class KernelLogisticProblem : public Problem {
 public:
  KernelLogisticProblem(std::vector<Vector> features, Vector labels, double bandwidth)
      : Problem(labels.size(), labels.size()),
        centers_(std::move(features)),
        labels_(std::move(labels)),
        bandwidth_(bandwidth) {
    for (double y : labels_)
      if (y != 1.0 && y != -1.0) throw BadLabel(y);
    gram_.resize(sample_count_ * sample_count_);
    for (std::size_t i = 0; i < sample_count_; ++i)
      for (std::size_t j = 0; j < sample_count_; ++j)
        gram_[i * sample_count_ + j] = rbf_kernel(centers_[i], centers_[j], bandwidth_);
    // Hessian of f_i is sigma'(t) K_i K_i^T with sigma' <= 1/4.
    double l_max = 0.0;
    for (std::size_t i = 0; i < sample_count_; ++i)
      l_max = std::max(l_max, 0.25 * squared_norm(gram_row(i)));
    lipschitz_max_ = l_max;
  }

  double per_sample_value(std::span<const double> w, std::size_t i) const override {
    return softplus(-labels_[i] * dot(gram_row(i), w));
  }

  double per_sample_value_grad(std::span<const double> w, std::size_t i, double coeff,
                               std::span<double> g) const override {
    const auto k_i = gram_row(i);
    const double t = labels_[i] * dot(k_i, w);
    axpy(-coeff * labels_[i] * logistic(-t), k_i, g);
    return softplus(-t);
  }

  double score(std::span<const double> w, std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < sample_count_; ++j)
      s += w[j] * rbf_kernel(x, centers_[j], bandwidth_);
    return s;
  }

  void attach_test_split(std::vector<Vector> features, Vector labels) {
    test_features_ = std::move(features);
    test_labels_ = std::move(labels);
  }

  std::optional<double> test_accuracy(std::span<const double> w) const override {
    if (test_features_.empty()) return std::nullopt;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_features_.size(); ++i) {
      const double predicted = score(w, test_features_[i]) >= 0.0 ? 1.0 : -1.0;
      if (predicted == test_labels_[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_features_.size());
  }

  Vector initial_point(Rng&) const override { return Vector(dim_, 0.0); }

  std::span<const double> gram_row(std::size_t i) const {
    return std::span<const double>(gram_).subspan(i * sample_count_, sample_count_);
  }

  double bandwidth() const { return bandwidth_; }

 private:
  std::vector<Vector> centers_;
  Vector labels_;
  double bandwidth_;
  std::vector<double> gram_;
  std::vector<Vector> test_features_;
  Vector test_labels_;
};

inline std::shared_ptr<KernelLogisticProblem> make_kernel_logistic(std::vector<Vector> features,
                                                                   Vector labels,
                                                                   double bandwidth) {
  if (!(bandwidth > 0.0)) throw ValidationError("bandwidth", "must be positive");
  return std::make_shared<KernelLogisticProblem>(std::move(features), std::move(labels),
                                                 bandwidth);
}

// ---------------------------------------------------------------------------
// One-hidden-layer MLP with softmax cross-entropy
// ---------------------------------------------------------------------------

// Softplus hidden activation keeps the loss L-smooth (unlike ReLU), gradient
// is hand-written backpropagation. Parameter layout: [W1 (h x d) | b1 (h) |
// W2 (C x h) | b2 (C)], row-major.
class MlpProblem : public Problem {
 public:
  MlpProblem(std::size_t hidden_width, std::vector<Vector> features, std::vector<int> labels,
             std::size_t num_classes, std::uint64_t seed)
      : Problem(labels.size(),
                hidden_width * features.at(0).size() + hidden_width +
                    num_classes * hidden_width + num_classes),
        features_(std::move(features)),
        labels_(std::move(labels)),
        hidden_(hidden_width),
        input_(features_[0].size()),
        classes_(num_classes),
        seed_(seed) {}

  double per_sample_value(std::span<const double> w, std::size_t i) const override {
    Forward f = forward(w, i);
    return f.loss;
  }

  double per_sample_value_grad(std::span<const double> w, std::size_t i, double coeff,
                               std::span<double> g) const override {
    const Forward f = forward(w, i);
    const auto x = std::span<const double>(features_[i]);

    // d loss / d logits = softmax - onehot(label)
    Vector dlogit(f.prob);
    dlogit[static_cast<std::size_t>(labels_[i])] -= 1.0;

    auto w2 = layer2(w);
    std::span<double> g2 = layer2_mut(g);
    std::span<double> gb2 = bias2_mut(g);
    Vector dhidden(hidden_, 0.0);
    for (std::size_t c = 0; c < classes_; ++c) {
      const double dc = dlogit[c];
      gb2[c] += coeff * dc;
      for (std::size_t h = 0; h < hidden_; ++h) {
        g2[c * hidden_ + h] += coeff * dc * f.hidden[h];
        dhidden[h] += dc * w2[c * hidden_ + h];
      }
    }

    std::span<double> g1 = layer1_mut(g);
    std::span<double> gb1 = bias1_mut(g);
    for (std::size_t h = 0; h < hidden_; ++h) {
      const double da = dhidden[h] * logistic(f.pre[h]);  // softplus' = logistic
      gb1[h] += coeff * da;
      for (std::size_t j = 0; j < input_; ++j) g1[h * input_ + j] += coeff * da * x[j];
    }
    return f.loss;
  }

  void attach_test_split(std::vector<Vector> features, std::vector<int> labels) {
    test_features_ = std::move(features);
    test_labels_ = std::move(labels);
  }

  std::optional<double> test_accuracy(std::span<const double> w) const override {
    if (test_features_.empty()) return std::nullopt;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_features_.size(); ++i) {
      if (predict(w, test_features_[i]) == test_labels_[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_features_.size());
  }

  int predict(std::span<const double> w, std::span<const double> x) const {
    const Vector logits = logits_for(w, x);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }

  Vector initial_point(Rng& rng) const override {
    Vector w(dim_, 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    std::span<double> mut(w);
    for (std::size_t i = 0; i < hidden_ * input_; ++i) mut[i] = s1 * rng.normal();
    std::span<double> w2 = layer2_mut(mut);
    for (std::size_t i = 0; i < classes_ * hidden_; ++i) w2[i] = s2 * rng.normal();
    return w;
  }

  std::size_t hidden_width() const { return hidden_; }
  std::size_t num_classes() const { return classes_; }
  std::uint64_t seed() const { return seed_; }

 private:
  struct Forward {
    Vector pre;     // W1 x + b1
    Vector hidden;  // softplus(pre)
    Vector prob;    // softmax(logits)
    double loss;
  };

  Vector logits_for(std::span<const double> w, std::span<const double> x) const {
    auto w1 = layer1(w);
    auto b1 = bias1(w);
    Vector hidden(hidden_);
    for (std::size_t h = 0; h < hidden_; ++h) {
      double a = b1[h];
      for (std::size_t j = 0; j < input_; ++j) a += w1[h * input_ + j] * x[j];
      hidden[h] = softplus(a);
    }
    auto w2 = layer2(w);
    auto b2 = bias2(w);
    Vector logits(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      double u = b2[c];
      for (std::size_t h = 0; h < hidden_; ++h) u += w2[c * hidden_ + h] * hidden[h];
      logits[c] = u;
    }
    return logits;
  }

  Forward forward(std::span<const double> w, std::size_t i) const {
    const auto x = std::span<const double>(features_[i]);
    auto w1 = layer1(w);
    auto b1 = bias1(w);
    Forward f;
    f.pre.resize(hidden_);
    f.hidden.resize(hidden_);
    for (std::size_t h = 0; h < hidden_; ++h) {
      double a = b1[h];
      for (std::size_t j = 0; j < input_; ++j) a += w1[h * input_ + j] * x[j];
      f.pre[h] = a;
      f.hidden[h] = softplus(a);
    }
    auto w2 = layer2(w);
    auto b2 = bias2(w);
    Vector logits(classes_);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes_; ++c) {
      double u = b2[c];
      for (std::size_t h = 0; h < hidden_; ++h) u += w2[c * hidden_ + h] * f.hidden[h];
      logits[c] = u;
      max_logit = std::max(max_logit, u);
    }
    double z = 0.0;
    f.prob.resize(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      f.prob[c] = std::exp(logits[c] - max_logit);
      z += f.prob[c];
    }
    for (double& p : f.prob) p /= z;
    const std::size_t label = static_cast<std::size_t>(labels_[i]);
    f.loss = std::log(z) - (logits[label] - max_logit);
    return f;
  }

  std::span<const double> layer1(std::span<const double> w) const {
    return w.subspan(0, hidden_ * input_);
  }
  std::span<const double> bias1(std::span<const double> w) const {
    return w.subspan(hidden_ * input_, hidden_);
  }
  std::span<const double> layer2(std::span<const double> w) const {
    return w.subspan(hidden_ * input_ + hidden_, classes_ * hidden_);
  }
  std::span<const double> bias2(std::span<const double> w) const {
    return w.subspan(hidden_ * input_ + hidden_ + classes_ * hidden_, classes_);
  }
  std::span<double> layer1_mut(std::span<double> g) const { return g.subspan(0, hidden_ * input_); }
  std::span<double> bias1_mut(std::span<double> g) const {
    return g.subspan(hidden_ * input_, hidden_);
  }
  std::span<double> layer2_mut(std::span<double> g) const {
    return g.subspan(hidden_ * input_ + hidden_, classes_ * hidden_);
  }
  std::span<double> bias2_mut(std::span<double> g) const {
    return g.subspan(hidden_ * input_ + hidden_ + classes_ * hidden_, classes_);
  }

  std::vector<Vector> features_;
  std::vector<int> labels_;
  std::size_t hidden_;
  std::size_t input_;
  std::size_t classes_;
  std::uint64_t seed_;
  std::vector<Vector> test_features_;
  std::vector<int> test_labels_;
};

inline std::shared_ptr<MlpProblem> make_mlp_problem(std::size_t hidden_width,
                                                    std::vector<Vector> features,
                                                    std::vector<int> class_labels,
                                                    std::uint64_t seed) {
  if (hidden_width < 1) throw ValidationError("hidden", "must be >= 1");
  int max_label = 0;
  for (int label : class_labels) {
    if (label < 0) throw ValidationError("labels", "class labels must be >= 0");
    max_label = std::max(max_label, label);
  }
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  if (classes < 2) throw ValidationError("labels", "need at least 2 classes");
  return std::make_shared<MlpProblem>(hidden_width, std::move(features), std::move(class_labels),
                                      classes, seed);
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

// Central-difference approximation of the batch gradient with the
// coordinate-wise step h * (1 + |w_j|).
inline Vector finite_diff_gradient(const Problem& problem, std::span<const double> w,
                                   IndexSpan idx, double h) {
  if (!(h > 0.0)) throw InvalidStep("finite-difference step must be positive");
  Vector wp(w.begin(), w.end());
  Vector g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double step = h * (1.0 + std::abs(w[j]));
    const double saved = wp[j];
    wp[j] = saved + step;
    const double fp = problem.value(wp, idx);
    wp[j] = saved - step;
    const double fm = problem.value(wp, idx);
    wp[j] = saved;
    g[j] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace ponos
