#pragma once

#include "autopipe/preprocess.hpp"

#include <cstdint>
#include <span>
#include <vector>

// Internal stage implementations shared by the preprocess translation units.
namespace autopipe::detail {

ImputerState fit_imputer(const MethodDescriptor& method,
                         const std::vector<ColumnSchema>& schema, const Matrix& cells);
void apply_imputer(const ImputerState& state, const std::vector<ColumnSchema>& schema,
                   Matrix& cells);

struct BalanceOutcome {
    Matrix cells;
    std::vector<std::uint8_t> labels;
    std::vector<AuditEvent> audit;
};

BalanceOutcome apply_balancing(const MethodDescriptor& method,
                               const std::vector<ColumnSchema>& schema, Matrix cells,
                               std::vector<std::uint8_t> labels, std::uint64_t seed);

EncoderState fit_encoder(const MethodDescriptor& method,
                         const std::vector<ColumnSchema>& schema, const Matrix& cells);
Matrix apply_encoder(const EncoderState& state, const std::vector<ColumnSchema>& schema,
                     const Matrix& cells, std::size_t* unknown_count);

ScalerState fit_scaler(const MethodDescriptor& method, const Matrix& X);
Matrix apply_scaler(const ScalerState& state, const Matrix& X);

SelectorState fit_selector(const MethodDescriptor& method, const Matrix& X,
                           std::span<const std::uint8_t> labels);
Matrix apply_selector(const SelectorState& state, const Matrix& X);

double quantile_sorted(const std::vector<double>& sorted, double q);

} // namespace autopipe::detail
