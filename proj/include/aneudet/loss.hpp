#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aneudet/anchors.hpp"

namespace aneudet {

struct LossParams {
  double lambda_reg = 0.5;
  double eps = 1e-7;
  std::size_t hard_neg_k = 2;

  void validate() const;
};

struct AnchorPrediction {
  Anchor anchor;
  TargetVector t;
};

struct AnchorLoss {
  double value = 0.0;
  std::array<double, 5> grad{};  // d value / d (p, dx, dy, dz, ds)
};

// Cross-entropy on p plus lambda-weighted L1 regression on the four geometric
// components, active only for positive labels. Throws for Ignored labels.
AnchorLoss anchor_loss(const AnchorPrediction& pred, const AnchorLabel& label,
                       const LossParams& params = {});

// Indices of the anchors entering the patch loss: every positive, then the
// hard_neg_k highest-loss negatives (ties to the lower index).
std::vector<std::size_t> select_training_anchors(std::span<const AnchorPrediction> preds,
                                                 std::span<const AnchorLabel> labels,
                                                 const LossParams& params = {});

double patch_loss(std::span<const AnchorPrediction> preds, std::span<const AnchorLabel> labels,
                  const LossParams& params = {});

// --- finite-difference gradient check ---------------------------------------

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> grad;
};

using DifferentiableFn = std::function<ValueAndGradient(std::span<const double>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool passed = true;
  std::vector<double> rel_errors;        // NaN for skipped coordinates
  std::vector<std::size_t> skipped;      // coordinates too close to a kink
};

// `kinks[i]`, when set, is the location of a non-differentiable point along
// coordinate i; coordinates within 10h of it are skipped.
GradCheckReport grad_check(const DifferentiableFn& f, std::span<const double> point, double h,
                           double tol, std::span<const std::optional<double>> kinks = {});

}  // namespace aneudet
