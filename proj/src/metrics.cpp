#include "humorfuse/metrics.hpp"

#include <cmath>
#include <string>

#include "humorfuse/error.hpp"

namespace humorfuse {

BinaryConfusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCategory::Validation, "label vectors differ in length (" +
                                               std::to_string(y_true.size()) + " vs " +
                                               std::to_string(y_pred.size()) + ")");
  }
  BinaryConfusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] > 1 || y_pred[i] > 1) {
      throw Error(ErrorCategory::Validation, "labels must be 0 or 1");
    }
    if (y_true[i]) {
      (y_pred[i] ? c.tp : c.fn) += 1;
    } else {
      (y_pred[i] ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

double class_f1(const BinaryConfusion& c, int positive_class) {
  const std::size_t tp = positive_class ? c.tp : c.tn;
  const std::size_t fp = positive_class ? c.fp : c.fn;
  const std::size_t fn = positive_class ? c.fn : c.fp;
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double macro_f1(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  if (y_true.empty() && y_pred.empty()) {
    throw Error(ErrorCategory::Validation, "macro F1 of an empty label vector");
  }
  const BinaryConfusion c = confusion(y_true, y_pred);
  return 0.5 * (class_f1(c, 0) + class_f1(c, 1));
}

double gain(double f1_fused, double f1_single) {
  if (!std::isfinite(f1_fused) || !std::isfinite(f1_single) || f1_fused < 0 || f1_single < 0 ||
      f1_fused > 100 || f1_single > 100) {
    throw Error(ErrorCategory::Validation, "gain: scores must lie in [0,1] or [0,100]");
  }
  // Values above 1 can only be percentages; mixing them with unit scores is an error.
  if ((f1_fused > 1.0) != (f1_single > 1.0) && f1_fused != 0.0 && f1_single != 0.0) {
    throw Error(ErrorCategory::Validation, "gain: mixed unit and percent scales");
  }
  return f1_fused - f1_single;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace humorfuse
