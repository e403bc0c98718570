#include "treeinfluence/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace treeinf {

LossKind loss_from_string(const std::string& name) {
    if (name == "logloss") return LossKind::Logloss;
    if (name == "squared") return LossKind::Squared;
    throw std::invalid_argument("unknown loss '" + name + "' (expected logloss|squared)");
}

const char* to_string(LossKind kind) noexcept {
    return kind == LossKind::Logloss ? "logloss" : "squared";
}

double sigmoid(double z) noexcept {
    const double t = std::exp(-std::fabs(z));
    return z >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
}

LossValues loss_derivatives(LossKind kind, double y, double z) {
    if (!std::isfinite(z)) {
        throw std::invalid_argument("loss_derivatives: prediction is not finite");
    }
    if (kind == LossKind::Squared) {
        const double r = z - y;
        return {0.5 * r * r, r, 1.0, 0.0};
    }
    if (y != 0.0 && y != 1.0) {
        throw std::invalid_argument("loss_derivatives: logloss needs labels in {0,1}, got " +
                                    std::to_string(y));
    }
    const double p = sigmoid(z);
    const double softplus = std::fmax(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
    const double hess = p * (1.0 - p);
    return {softplus - y * z, p - y, hess, hess * (1.0 - 2.0 * p)};
}

}  // namespace treeinf
