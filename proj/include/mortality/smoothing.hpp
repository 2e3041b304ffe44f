#pragma once

#include "mortality/surface.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace mortality {

/// Logarithmic grid searched when the penalty weight is chosen automatically.
struct LambdaGrid {
    double min = 1e-4;
    double max = 1e6;
    int count = 25;

    std::vector<double> values() const;
};

struct SmoothConfig {
    /// Cubic B-spline basis size; defaults to min(floor(n_ages / 2.5), 35).
    std::optional<int> num_basis;
    /// Penalty weight; empty selects it by generalized cross-validation.
    std::optional<double> lambda;
    LambdaGrid lambda_grid;
    int difference_order = 2;
    /// Fitted curve forced nondecreasing for ages >= this; empty disables.
    std::optional<int> monotone_from = 65;
    /// Per-age weights; empty means unit weights.
    std::vector<double> weights;

    int basis_size(int n_ages) const;
};

/// Smoothed log-rate surface f_t(x) with the per-age observational variance.
struct SmoothSurface {
    Window ages;
    Window years;
    Eigen::MatrixXd values;  // ages x years
    Eigen::VectorXd sigma2;  // per age
    std::vector<double> lambdas;  // penalty used for each year
};

/// Least-squares projection of the tail starting at `from_index` onto
/// nondecreasing sequences (pool adjacent violators, unit weights).
Eigen::VectorXd enforce_monotone(const Eigen::VectorXd& values, Eigen::Index from_index);

/// Penalty weight minimizing GCV(lambda) = n RSS / (n - tr H)^2 over the config grid.
double choose_lambda(std::span<const int> ages, const Eigen::VectorXd& ys, const SmoothConfig& config);

struct CurveFit {
    Eigen::VectorXd values;
    double lambda = 0.0;
};

CurveFit smooth_curve(std::span<const int> ages, const Eigen::VectorXd& ys, const SmoothConfig& config);

/// Smooths ln m for every year independently.
SmoothSurface smooth_surface(const MortalitySurface& surface, const SmoothConfig& config);

}  // namespace mortality
