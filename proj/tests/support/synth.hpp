#pragma once

#include "autopipe/dataset.hpp"

#include <cstdint>

namespace autopipe::test {

/// Synthetic binary-classification dataset: gaussian features, a planted
/// linear signal on the first `informative` features, optional categorical
/// conversion of the trailing features and missing-at-random cells.
struct SynthSpec {
    std::size_t rows = 400;
    std::size_t features = 10;
    std::size_t informative = 3;
    std::size_t categorical = 0; // trailing features binned into 3 categories
    double positive_fraction = 0.3;
    double missing_fraction = 0.0;
    double noise = 0.5; // label noise on the latent score, relative to signal 1
    std::uint64_t seed = 1;
};

TabularDataset make_synthetic(const SynthSpec& spec);

} // namespace autopipe::test
