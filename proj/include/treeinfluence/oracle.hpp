#pragma once

#include <cstdint>

#include "treeinfluence/gbdt.hpp"

namespace treeinf {

enum class RetrainMode { Full, FixedStructure };

RetrainMode retrain_mode_from_string(const std::string& name);

// Ground-truth leave-one-out retraining. Full mode reruns training on the
// reduced sample; FixedStructure replays the reference structures and refits
// only leaf values, recomputing derivatives at its own intermediate
// predictions each step. Both modes keep the reference initial prediction,
// so differences reflect the data change only.
Ensemble retrain_without(const Dataset& ds, const TrainParams& params, std::int64_t i0,
                         RetrainMode mode, const Ensemble& reference);

// Fixed-structure leaf refit with w_i0 replaced by new_weight; the
// finite-difference target for prediction gradients.
Ensemble perturb_weight(const Dataset& ds, const TrainParams& params, std::int64_t i0,
                        double new_weight, const Ensemble& reference);

// True iff any (feature, threshold) pair differs at any node of any tree.
bool structure_changed(const Ensemble& a, const Ensemble& b);

}  // namespace treeinf
