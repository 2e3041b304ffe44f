#pragma once

#include "mortality/forecast.hpp"
#include "mortality/smoothing.hpp"
#include "mortality/surface.hpp"
#include "mortality/tsforecast.hpp"

#include <Eigen/Dense>

namespace mortality {

enum class LcVariant { lc, lcs };

/// ln m_{x,t} = alpha_x + beta_x kappa_t + eps_{x,t}, with sum(beta) = 1 and
/// sum(kappa) = 0.
struct LcModel {
    Window ages;
    Window years;
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd kappa;
    Eigen::MatrixXd residuals;  // relative to the log surface the model was fitted to
    double explained_variance = 1.0;      // s1^2 / sum s_i^2
    double explained_variance_rss = 1.0;  // 1 - |residuals|^2 / |centered|^2
    LcVariant variant = LcVariant::lc;

    /// alpha + beta kappa', ages x years.
    Eigen::MatrixXd fitted_log_rates() const;
};

LcModel fit_lc(const MortalitySurface& surface);

/// Lee-Carter on the log-rate matrix directly (ages x years).
LcModel fit_lc_log(const Eigen::MatrixXd& log_rates, Window ages, Window years);

/// Lee-Carter applied to the per-year smoothed surface.
LcModel fit_lcs(const MortalitySurface& surface, const SmoothConfig& config);

/// Forecasts kappa with the given model; only kappa uncertainty enters the variance.
ForecastSurface forecast_lc(const LcModel& model, const TsSpec& spec, int horizon, double level);

/// Residuals divided by their overall standard deviation.
Eigen::MatrixXd standardized_residuals(const Eigen::MatrixXd& residuals);

}  // namespace mortality
