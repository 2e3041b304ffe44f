#pragma once

#include "mortality/forecast.hpp"
#include "mortality/smoothing.hpp"
#include "mortality/surface.hpp"
#include "mortality/tsforecast.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mortality {

/// Functional demographic model:
///   f_t(x) = mu(x) + sum_k beta_{t,k} phi_k(x) + e_t(x),   e_t(x) ~ N(0, v(x))
/// fitted to per-year smoothed log rates f_t(x).
struct FdmModel {
    Window ages;
    Window years;
    int num_components = 0;
    Eigen::VectorXd mu;              // per age
    Eigen::MatrixXd phi;             // ages x K, orthonormal columns
    Eigen::MatrixXd beta;            // years x K, each column sums to zero
    Eigen::MatrixXd smoothed;        // f_t(x), ages x years
    Eigen::MatrixXd model_residuals; // e_t(x), ages x years
    Eigen::VectorXd v;               // model error variance per age
    Eigen::VectorXd sigma2;          // observational variance per age
    Eigen::VectorXd sigma2_mu;       // variance of the location estimate, v / n
    std::vector<double> explained_shares;  // K leading shares s_k^2 / sum s_i^2

    /// mu + phi beta', ages x years.
    Eigen::MatrixXd fitted_log_rates() const;
};

/// Decomposes an already smoothed surface. `smoothed` is ages x years.
FdmModel fit_fdm_smoothed(const Eigen::MatrixXd& smoothed, const Eigen::VectorXd& sigma2, Window ages,
                          Window years, int num_components);

FdmModel fit_fdm(const MortalitySurface& surface, const SmoothConfig& config, int num_components = 4);

/// Analytic forecast: point mu + sum_k beta~_k phi_k and variance
/// sigma2_mu + sum_k u_k phi_k^2 + v + sigma2.
ForecastSurface forecast_fdm(const FdmModel& model, const TsSpec& spec, int horizon, double level);

/// Residual-bootstrap intervals. Replicate b draws from a generator seeded by
/// (seed, b), so results do not depend on evaluation order.
ForecastSurface bootstrap_intervals(const FdmModel& model, const TsSpec& spec, int horizon, double level,
                                    int replicates, std::uint64_t seed);

}  // namespace mortality
