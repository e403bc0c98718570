#pragma once

#include <string>

namespace treeinf {

enum class LossKind { Logloss, Squared };

LossKind loss_from_string(const std::string& name);
const char* to_string(LossKind kind) noexcept;

// Loss value together with its first three derivatives in the prediction.
struct LossValues {
    double value = 0.0;
    double grad = 0.0;
    double hess = 0.0;
    double third = 0.0;
};

// Overflow-safe sigmoid; exact 0/1 saturation for |z| beyond ~745 is fine,
// the degenerate-denominator guard in leaf fitting absorbs underflowed
// hessians.
double sigmoid(double z) noexcept;

// Logloss:  L = softplus(z) - y*z,  g = sigmoid(z) - y,  h = s(1-s),
//           k = h*(1-2s); y must be 0 or 1.
// Squared:  L = (z-y)^2 / 2,  g = z-y,  h = 1,  k = 0.
LossValues loss_derivatives(LossKind kind, double y_true, double z);

}  // namespace treeinf
