#ifndef DEMPOOL_CLASSIFY_HPP
#define DEMPOOL_CLASSIFY_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "dempool/common.hpp"

namespace dempool {

/// One descriptor per row plus an integer label in [0, num_classes) per row.
template <typename Scalar>
struct LabeledDescriptorSet {
  Matrix<Scalar> descriptors;  // m x D
  std::vector<int> labels;
  int num_classes = 0;
};

template <typename Scalar>
LabeledDescriptorSet<Scalar> make_labeled_set(Matrix<Scalar> descriptors,
                                              std::vector<int> labels) {
  require(descriptors.rows() == static_cast<Index>(labels.size()),
          errc::dimension_mismatch,
          "label count does not match descriptor count");
  require(descriptors.rows() >= 1, errc::invalid_argument,
          "labeled set must be non-empty");
  require(descriptors.allFinite(), errc::non_finite_entry,
          "descriptors contain a non-finite entry");
  int max_label = 0;
  for (int label : labels) {
    require(label >= 0, errc::invalid_argument, "labels must be non-negative");
    max_label = std::max(max_label, label);
  }
  const int num_classes = max_label + 1;
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (int label : labels) ++counts[static_cast<std::size_t>(label)];
  for (int c = 0; c < num_classes; ++c)
    require(counts[static_cast<std::size_t>(c)] >= 1, errc::invalid_argument,
            "class " + std::to_string(c) + " has no examples");
  return LabeledDescriptorSet<Scalar>{std::move(descriptors),
                                      std::move(labels), num_classes};
}

template <typename Scalar>
struct OvrLinearModel {
  Matrix<Scalar> weights;  // num_classes x D
  Vector<Scalar> bias;     // num_classes
};

/// Trains one-vs-rest linear classifiers (squared hinge, L2 regularized,
/// hyperparameter reg_c). Each binary problem minimizes
/// f(w,b) = |w|^2/2 + reg_c sum_i max(0, 1 - y_i (w.x_i + b))^2
/// by gradient descent with Armijo backtracking from w = 0, to relative
/// objective tolerance 1e-6. Smooth and convex, so fully deterministic.
template <typename Scalar>
OvrLinearModel<Scalar> train_ovr_linear(const LabeledDescriptorSet<Scalar>& train,
                                        Scalar reg_c) {
  require(reg_c > Scalar(0), errc::invalid_argument, "reg_c must be positive");
  require(train.num_classes >= 2, errc::single_class,
          "training needs at least two classes");

  const Matrix<Scalar>& x = train.descriptors;
  const Index m = x.rows();
  const Index dim = x.cols();
  constexpr Scalar kRelTol = Scalar(1e-6);
  constexpr int kMaxIters = 2000;

  OvrLinearModel<Scalar> model;
  model.weights = Matrix<Scalar>::Zero(train.num_classes, dim);
  model.bias = Vector<Scalar>::Zero(train.num_classes);

  for (int c = 0; c < train.num_classes; ++c) {
    Vector<Scalar> y(m);
    for (Index i = 0; i < m; ++i)
      y[i] = train.labels[static_cast<std::size_t>(i)] == c ? Scalar(1)
                                                            : Scalar(-1);

    Vector<Scalar> w = Vector<Scalar>::Zero(dim);
    Scalar b = 0;

    auto objective = [&](const Vector<Scalar>& wv, Scalar bv) {
      const Eigen::Array<Scalar, Eigen::Dynamic, 1> margins =
          (Scalar(1) - y.array() * ((x * wv).array() + bv)).max(Scalar(0));
      return Scalar(0.5) * wv.squaredNorm() + reg_c * margins.square().sum();
    };

    Scalar f = objective(w, b);
    Scalar step = Scalar(1);
    for (int iter = 0; iter < kMaxIters; ++iter) {
      const Eigen::Array<Scalar, Eigen::Dynamic, 1> margins =
          (Scalar(1) - y.array() * ((x * w).array() + b)).max(Scalar(0));
      const Vector<Scalar> active = (margins * y.array()).matrix();
      const Vector<Scalar> grad_w = w - Scalar(2) * reg_c * (x.transpose() * active);
      const Scalar grad_b = -Scalar(2) * reg_c * active.sum();
      const Scalar grad_sq = grad_w.squaredNorm() + grad_b * grad_b;
      if (grad_sq == Scalar(0)) break;

      // Armijo backtracking, warm-started from the last accepted step.
      step *= Scalar(2);
      Scalar f_new = 0;
      Vector<Scalar> w_new;
      Scalar b_new = 0;
      bool accepted = false;
      for (int halvings = 0; halvings < 60; ++halvings) {
        w_new = w - step * grad_w;
        b_new = b - step * grad_b;
        f_new = objective(w_new, b_new);
        if (f_new <= f - Scalar(1e-4) * step * grad_sq) {
          accepted = true;
          break;
        }
        step *= Scalar(0.5);
      }
      if (!accepted) break;
      w = std::move(w_new);
      b = b_new;
      const Scalar decrease = f - f_new;
      f = f_new;
      if (decrease <= kRelTol * std::max(std::abs(f), Scalar(1e-12))) break;
    }

    model.weights.row(c) = w.transpose();
    model.bias[c] = b;
  }
  return model;
}

/// Argmax over per-class scores; ties break toward the smaller class index.
template <typename Scalar>
std::vector<int> predict(const OvrLinearModel<Scalar>& model,
                         const Matrix<Scalar>& descriptors) {
  require(descriptors.cols() == model.weights.cols(), errc::dimension_mismatch,
          "descriptor dim does not match model");
  const Matrix<Scalar> scores =
      descriptors * model.weights.transpose() +
      Matrix<Scalar>::Ones(descriptors.rows(), 1) * model.bias.transpose();
  std::vector<int> labels(static_cast<std::size_t>(descriptors.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = static_cast<int>(c);
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

template <typename Scalar = double>
Scalar accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  require(truth.size() == pred.size() && !truth.empty(),
          errc::dimension_mismatch, "label vectors must match and be non-empty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == pred[i]) ++correct;
  return Scalar(correct) / Scalar(truth.size());
}

/// Per-class recall: fraction of class-c examples predicted as c.
template <typename Scalar = double>
std::vector<Scalar> per_class_accuracy(const std::vector<int>& truth,
                                       const std::vector<int>& pred,
                                       int num_classes) {
  std::vector<Scalar> acc(static_cast<std::size_t>(num_classes), Scalar(0));
  std::vector<std::size_t> totals(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto c = static_cast<std::size_t>(truth[i]);
    ++totals[c];
    if (truth[i] == pred[i]) acc[c] += Scalar(1);
  }
  for (std::size_t c = 0; c < acc.size(); ++c)
    if (totals[c] > 0) acc[c] /= Scalar(totals[c]);
  return acc;
}

}  // namespace dempool

#endif  // DEMPOOL_CLASSIFY_HPP
