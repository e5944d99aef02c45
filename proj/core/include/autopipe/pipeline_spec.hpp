#pragma once

#include "autopipe/rng.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace autopipe {

/// The five ordered preprocessing stages. The order is fixed; every pipeline
/// runs them 1 through 5.
inline constexpr int kNumStages = 5;

enum class Stage : int {
    imputation = 0,
    balancing = 1,
    engineering = 2,
    scaling = 3,
    selection = 4,
};

inline const char* stage_name(int s) {
    static constexpr const char* names[kNumStages] = {
        "imputation", "balancing", "engineering", "scaling", "selection"};
    return names[s];
}

/// One point in the pipeline space: a method index per stage.
struct PipelineSpec {
    std::array<int, kNumStages> indices{};

    auto operator<=>(const PipelineSpec&) const = default;

    std::string to_string() const {
        std::string s = "(";
        for (int i = 0; i < kNumStages; ++i) {
            if (i) s += ",";
            s += std::to_string(indices[i]);
        }
        return s + ")";
    }

    /// Seed derivation: fold the stage indices into h. Used for the
    /// per-pipeline seed so evaluation results never depend on scheduling.
    std::uint64_t mix_into(std::uint64_t h) const {
        for (int i = 0; i < kNumStages; ++i) {
            h = mix64(h, static_cast<std::uint64_t>(indices[i]) + 0x9e37u);
        }
        return h;
    }
};

} // namespace autopipe
