#include "autopipe/common.hpp"
#include "autopipe/models.hpp"

#include <cmath>

namespace autopipe {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double dot_row(const Matrix& X, std::size_t r, std::span<const double> w, double bias) {
    const auto row = X.row(r);
    double z = bias;
    for (std::size_t j = 0; j < row.size(); ++j) z += row[j] * w[j];
    return z;
}

double norm2(std::span<const double> v, double extra) {
    double s = extra * extra;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

double logistic_loss(const Matrix& X, std::span<const std::uint8_t> y,
                     std::span<const double> w, double bias, double l2) {
    const double n = static_cast<double>(X.rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        const double z = dot_row(X, r, w, bias);
        // -y log p - (1-y) log(1-p) == log(1+exp(z)) - y z
        loss += log1p_exp(z) - (y[r] ? z : 0.0);
    }
    loss /= n;
    double penalty = 0.0;
    for (double x : w) penalty += x * x;
    return loss + 0.5 * l2 * penalty / n;
}

void logistic_gradient(const Matrix& X, std::span<const std::uint8_t> y,
                       std::span<const double> w, double bias, double l2,
                       std::span<double> grad_w, double& grad_bias) {
    const double n = static_cast<double>(X.rows);
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_bias = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        const double err = sigmoid(dot_row(X, r, w, bias)) - (y[r] ? 1.0 : 0.0);
        const auto row = X.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) grad_w[j] += err * row[j];
        grad_bias += err;
    }
    for (std::size_t j = 0; j < grad_w.size(); ++j) {
        grad_w[j] = (grad_w[j] + l2 * w[j]) / n;
    }
    grad_bias /= n;
}

namespace {

class LogisticModel final : public Classifier {
public:
    LogisticModel(std::vector<double> w, double bias) : w_(std::move(w)), bias_(bias) {}

    std::vector<double> score(const Matrix& X) const override {
        std::vector<double> out(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) {
            out[r] = sigmoid(dot_row(X, r, w_, bias_));
        }
        return out;
    }

private:
    std::vector<double> w_;
    double bias_;
};

} // namespace

/// Batch gradient descent with backtracking (Armijo) step size; stops at
/// gradient norm < 1e-6 or the iteration cap. The linear predictor z = Xw+b
/// is cached and updated along the step direction, so each backtracking
/// trial costs O(n) instead of O(n*d).
std::unique_ptr<Classifier> fit_logistic(const Matrix& X, std::span<const std::uint8_t> y,
                                         double l2, int max_iters) {
    constexpr double kGradTol = 1e-6;
    constexpr double kArmijo = 1e-4;
    const double n = static_cast<double>(X.rows);

    std::vector<double> w(X.cols, 0.0);
    double bias = 0.0;
    std::vector<double> z(X.rows, 0.0); // X w + bias
    std::vector<double> grad_w(X.cols);
    std::vector<double> step_z(X.rows); // X grad_w + grad_bias

    auto loss_of = [&](std::span<const double> zs, std::span<const double> ws) {
        double loss = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) {
            loss += log1p_exp(zs[r]) - (y[r] ? zs[r] : 0.0);
        }
        loss /= n;
        double penalty = 0.0;
        for (double x : ws) penalty += x * x;
        return loss + 0.5 * l2 * penalty / n;
    };

    double loss = loss_of(z, w);
    double step = 1.0;
    std::vector<double> trial_z(X.rows), trial_w(X.cols);
    for (int iter = 0; iter < max_iters; ++iter) {
        std::fill(grad_w.begin(), grad_w.end(), 0.0);
        double grad_bias = 0.0;
        for (std::size_t r = 0; r < X.rows; ++r) {
            const double err = sigmoid(z[r]) - (y[r] ? 1.0 : 0.0);
            const auto row = X.row(r);
            for (std::size_t j = 0; j < row.size(); ++j) grad_w[j] += err * row[j];
            grad_bias += err;
        }
        for (std::size_t j = 0; j < grad_w.size(); ++j) {
            grad_w[j] = (grad_w[j] + l2 * w[j]) / n;
        }
        grad_bias /= n;

        const double gnorm = norm2(grad_w, grad_bias);
        if (gnorm < kGradTol) break;

        for (std::size_t r = 0; r < X.rows; ++r) {
            const auto row = X.row(r);
            double s = grad_bias;
            for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * grad_w[j];
            step_z[r] = s;
        }

        const double g2 = gnorm * gnorm;
        double trial_loss = 0.0;
        while (true) {
            for (std::size_t r = 0; r < X.rows; ++r) trial_z[r] = z[r] - step * step_z[r];
            for (std::size_t j = 0; j < w.size(); ++j) trial_w[j] = w[j] - step * grad_w[j];
            trial_loss = loss_of(trial_z, trial_w);
            if (trial_loss <= loss - kArmijo * step * g2) break;
            step *= 0.5;
            if (step < 1e-16) break; // no descent at machine precision
        }
        if (step < 1e-16) break;
        w.swap(trial_w);
        bias -= step * grad_bias;
        z.swap(trial_z);
        loss = trial_loss;
        step *= 2.0; // let the accepted step grow back
    }
    return std::make_unique<LogisticModel>(std::move(w), bias);
}

} // namespace autopipe
