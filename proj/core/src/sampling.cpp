#include "autopipe/sampling.hpp"

#include "autopipe/common.hpp"
#include "autopipe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace autopipe {

namespace {

constexpr std::uint64_t kPermSalt = 0x6c68735fu;
constexpr std::uint64_t kDrawSalt = 0x6c2d64u;
constexpr std::uint64_t kRepairSalt = 0x6c2d72u;

int index_of(double x, int n_methods) {
    const int i = static_cast<int>(x);
    return std::min(std::max(i, 0), n_methods - 1);
}

std::vector<std::size_t> duplicate_positions(const std::vector<PipelineSpec>& specs) {
    std::map<PipelineSpec, std::size_t> first;
    std::vector<std::size_t> dups;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!first.try_emplace(specs[i], i).second) dups.push_back(i);
    }
    return dups;
}

} // namespace

LhsDesign lhs_design(const std::vector<int>& step_sizes, std::size_t n_samples,
                     std::uint64_t seed) {
    if (step_sizes.size() != static_cast<std::size_t>(kNumStages)) {
        throw DataError("lhs_design expects one step size per stage");
    }
    for (int n : step_sizes) {
        if (n < 1) throw DataError("every stage needs at least one method");
    }
    if (n_samples < 1) throw DataError("n_samples must be >= 1");

    LhsDesign design;
    design.step_sizes = step_sizes;
    design.n_samples = n_samples;
    design.seed = seed;
    design.samples = Matrix(n_samples, kNumStages);
    design.specs.resize(n_samples);

    for (int s = 0; s < kNumStages; ++s) {
        std::vector<std::size_t> strata(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) strata[i] = i;
        Rng perm_rng(mix64(seed, kPermSalt, static_cast<std::uint64_t>(s)));
        perm_rng.shuffle(strata);

        Rng draw_rng(mix64(seed, kDrawSalt, static_cast<std::uint64_t>(s)));
        const auto n_methods = static_cast<std::uint64_t>(step_sizes[s]);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const std::uint64_t p = strata[i];
            // The stratum's left-edge index, in exact integer arithmetic.
            // Counting strata per index this way keeps every per-stage index
            // count within {floor(n/N), ceil(n/N)}; a stratum straddling an
            // integer boundary draws only from its index-consistent part.
            const std::uint64_t index = p * n_methods / n_samples;
            const double lo = static_cast<double>(p) * static_cast<double>(n_methods) /
                              static_cast<double>(n_samples);
            double hi = static_cast<double>(p + 1) * static_cast<double>(n_methods) /
                        static_cast<double>(n_samples);
            hi = std::min(hi, static_cast<double>(index + 1));
            const double x = lo + draw_rng.next_double() * (hi - lo);
            design.samples.at(i, s) = x;
            design.specs[i].indices[s] = index_of(x, step_sizes[s]);
        }
    }

    // Discretization can collide even though the continuous design cannot.
    // Repair by swapping single-stage draws between samples: the per-stage
    // stratum occupancy stays a permutation, so stratification survives.
    double space = 1.0;
    for (int n : step_sizes) space *= static_cast<double>(n);
    auto dups = duplicate_positions(design.specs);
    if (!dups.empty() && space >= static_cast<double>(n_samples)) {
        Rng repair_rng(mix64(seed, kRepairSalt));
        const std::size_t cap = 200 + 20 * n_samples;
        for (std::size_t attempt = 0; attempt < cap && !dups.empty(); ++attempt) {
            const std::size_t d = dups.front();
            const int s = static_cast<int>(repair_rng.next_below(kNumStages));
            std::size_t partner = repair_rng.next_below(n_samples);
            if (partner == d) partner = (d + 1) % n_samples;
            std::swap(design.samples.at(d, s), design.samples.at(partner, s));
            design.specs[d].indices[s] = index_of(design.samples.at(d, s), step_sizes[s]);
            design.specs[partner].indices[s] =
                index_of(design.samples.at(partner, s), step_sizes[s]);
            dups = duplicate_positions(design.specs);
        }
    }
    if (!dups.empty()) {
        design.warnings.push_back(std::to_string(dups.size()) +
                                  " duplicate pipeline specs kept after dedup retries");
    }
    return design;
}

std::vector<PipelineSpec> lhs_pipelines(const std::vector<int>& step_sizes,
                                        std::size_t n_samples, std::uint64_t seed) {
    return lhs_design(step_sizes, n_samples, seed).specs;
}

} // namespace autopipe
