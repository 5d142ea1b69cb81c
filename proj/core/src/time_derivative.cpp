#include "fieldpipe/aeroacoustic.hpp"

#include "fieldpipe/error.hpp"

#include <cmath>

namespace fieldpipe {

std::vector<double> smooth_derivative(std::span<const double> qm2, std::span<const double> qm1,
                                      std::span<const double> qp1, std::span<const double> qp2, double dt) {
  std::vector<double> out(qm2.size());
  const double scale = 1.0 / (8.0 * dt);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (2.0 * (qp1[i] - qm1[i]) + (qp2[i] - qm2[i])) * scale;
  }
  return out;
}

std::optional<FieldStep> TimeDerivative::push(FieldStep step) {
  if (step.quantity.domain != AnalysisDomain::Time) {
    throw ValidationError("timeDeriv1 does not support FREQUENCY data ('" + step.quantity.name + "')");
  }
  if (!window_.empty()) {
    const auto& prev = window_.back();
    if (prev.quantity.defined_on != step.quantity.defined_on ||
        prev.quantity.components != step.quantity.components || prev.quantity.regions != step.quantity.regions) {
      throw ValidationError("timeDeriv1: quantity '" + step.quantity.name + "' changed shape between steps");
    }
    if (!(step.step_value > prev.step_value)) {
      throw ValidationError("timeDeriv1: step values must increase");
    }
  }
  window_.push_back(std::move(step));
  if (window_.size() > kWindow) window_.pop_front();
  if (window_.size() < kWindow) return std::nullopt;

  const double dt = (window_[4].step_value - window_[0].step_value) / 4.0;
  for (std::size_t i = 0; i + 1 < kWindow; ++i) {
    const double gap = window_[i + 1].step_value - window_[i].step_value;
    if (std::abs(gap - dt) > 1e-9 * dt) {
      throw ValidationError("timeDeriv1: non-uniform step spacing around step value " +
                            std::to_string(window_[2].step_value));
    }
  }
  const auto& centre = window_[2];
  FieldStep out;
  out.quantity = centre.quantity;
  out.quantity.name = output_;
  out.step_index = centre.step_index;
  out.step_value = centre.step_value;
  for (std::size_t r = 0; r < centre.values.size(); ++r) {
    out.values.push_back(smooth_derivative(window_[0].values[r], window_[1].values[r], window_[3].values[r],
                                           window_[4].values[r], dt));
  }
  return out;
}

}  // namespace fieldpipe
