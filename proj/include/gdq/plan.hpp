#pragma once

#include "gdq/patch.hpp"

#include <cstddef>

namespace gdq {

using BitCode = int;

/// Per-patch allocation record.
struct PatchPlan {
    std::size_t id = 0;
    PatchOrigin origin;
    double entropy = 0.0;
    BitCode gbc_bit = 8;
    BitCode final_bit = 8;
    double gate_score = 0.0;
    std::size_t gate_index = 0;
};

} // namespace gdq
