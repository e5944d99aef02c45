#pragma once

#include "autopipe/models.hpp"

#include <memory>
#include <span>

namespace autopipe {

std::unique_ptr<Classifier> fit_logistic(const Matrix& X, std::span<const std::uint8_t> y,
                                         double l2, int max_iters);

} // namespace autopipe
