#pragma once

#include "autopipe/matrix.hpp"
#include "autopipe/pipeline_spec.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace autopipe {

/// Stratified discrete Latin hypercube design over the pipeline index space.
/// Per stage, [0, N_s) is cut into n_samples equal strata and each stratum
/// receives exactly one draw; the stratum-to-sample assignment is a seeded
/// permutation. Discrete indices are the integer parts of the draws.
struct LhsDesign {
    std::vector<int> step_sizes;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    Matrix samples; // n_samples x kNumStages continuous draws, x_s in [0, N_s)
    std::vector<PipelineSpec> specs;
    std::vector<std::string> warnings;
};

LhsDesign lhs_design(const std::vector<int>& step_sizes, std::size_t n_samples,
                     std::uint64_t seed);

/// Convenience wrapper returning just the specs.
std::vector<PipelineSpec> lhs_pipelines(const std::vector<int>& step_sizes,
                                        std::size_t n_samples, std::uint64_t seed);

} // namespace autopipe
