#include "aneudet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aneudet/errors.hpp"

namespace aneudet {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossParams::validate() const {
  if (!(lambda_reg >= 0.0)) throw ConfigError("lambda_reg must be >= 0");
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("eps must lie in (0, 0.5)");
  if (hard_neg_k < 1) throw ConfigError("hard_neg_k must be >= 1");
}

AnchorLoss anchor_loss(const AnchorPrediction& pred, const AnchorLabel& label,
                       const LossParams& params) {
  if (label.status == AnchorStatus::Ignored) {
    throw ConfigError("anchor_loss called with an Ignored anchor");
  }
  const bool positive = label.status == AnchorStatus::Positive;
  if (positive && !label.target) throw ConfigError("positive anchor label lacks a target");

  AnchorLoss out;
  const double raw_p = pred.t.p;
  const double p = std::clamp(raw_p, params.eps, 1.0 - params.eps);
  const bool clamped = p != raw_p;
  if (positive) {
    out.value = -std::log(p);
    out.grad[0] = clamped ? 0.0 : -1.0 / p;
    for (int i = 1; i < 5; ++i) {
      const double diff = pred.t[i] - (*label.target)[i];
      out.value += params.lambda_reg * std::abs(diff);
      out.grad[i] = params.lambda_reg * sign(diff);
    }
  } else {
    out.value = -std::log(1.0 - p);
    out.grad[0] = clamped ? 0.0 : 1.0 / (1.0 - p);
  }
  return out;
}

std::vector<std::size_t> select_training_anchors(std::span<const AnchorPrediction> preds,
                                                 std::span<const AnchorLabel> labels,
                                                 const LossParams& params) {
  if (preds.size() != labels.size()) throw ConfigError("predictions and labels are not aligned");
  params.validate();
  std::vector<std::size_t> selected;
  std::vector<std::pair<double, std::size_t>> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].status == AnchorStatus::Positive) {
      selected.push_back(i);
    } else if (labels[i].status == AnchorStatus::Negative) {
      negatives.emplace_back(anchor_loss(preds[i], labels[i], params).value, i);
    }
  }
  const std::size_t k = std::min(params.hard_neg_k, negatives.size());
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(k),
                    negatives.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  for (std::size_t i = 0; i < k; ++i) selected.push_back(negatives[i].second);
  std::sort(selected.begin(), selected.end());
  return selected;
}

double patch_loss(std::span<const AnchorPrediction> preds, std::span<const AnchorLabel> labels,
                  const LossParams& params) {
  const auto selected = select_training_anchors(preds, labels, params);
  if (selected.empty()) throw ConfigError("patch has neither positive nor negative anchors");
  double sum = 0.0;
  for (std::size_t i : selected) sum += anchor_loss(preds[i], labels[i], params).value;
  return sum / static_cast<double>(selected.size());
}

GradCheckReport grad_check(const DifferentiableFn& f, std::span<const double> point, double h,
                           double tol, std::span<const std::optional<double>> kinks) {
  if (!(h > 0.0)) throw ConfigError("grad_check step must be > 0");
  GradCheckReport report;
  const ValueAndGradient base = f(point);
  if (base.grad.size() != point.size()) throw ConfigError("gradient size does not match point");

  std::vector<double> x(point.begin(), point.end());
  report.rel_errors.assign(point.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (i < kinks.size() && kinks[i] && std::abs(point[i] - *kinks[i]) < 10.0 * h) {
      report.skipped.push_back(i);
      continue;
    }
    x[i] = point[i] + h;
    const double fp = f(x).value;
    x[i] = point[i] - h;
    const double fm = f(x).value;
    x[i] = point[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = base.grad[i];
    const double scale = std::max(std::abs(numeric), std::abs(analytic));
    const double err = scale == 0.0 ? 0.0 : std::abs(numeric - analytic) / scale;
    report.rel_errors[i] = err;
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace aneudet
