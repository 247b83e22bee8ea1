#pragma once

#include <cstdint>
#include <span>

namespace humorfuse {

struct BinaryConfusion {
  std::size_t tp = 0;  // with respect to class 1
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

BinaryConfusion confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

// F1 of one class; a class absent from both truth and prediction scores 0.
double class_f1(const BinaryConfusion& c, int positive_class);

// Unweighted mean of the class-0 and class-1 F1 scores.
double macro_f1(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred);

// f1_fused - f1_single. Both values must share a scale: [0,1] or percent.
double gain(double f1_fused, double f1_single);

double mean(std::span<const double> values);
// Sample standard deviation (n-1); 0 for fewer than two values.
double sample_std(std::span<const double> values);

}  // namespace humorfuse
