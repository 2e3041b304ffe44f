#pragma once

#include "mortality/fdm.hpp"
#include "mortality/lee_carter.hpp"
#include "mortality/lifetable.hpp"
#include "mortality/surface.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mortality {

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

struct MetricRow {
    double me = 0.0;    // mean error
    double mse = 0.0;   // mean squared error
    double mpe = 0.0;   // mean of e / ln m
    double mape = 0.0;  // mean of |e / ln m|
};

/// Errors e = ln m - fitted on the log-rate scale, aggregated per age (over
/// years) and per year (over ages). Cells with ln m = 0 are left out of
/// MPE/MAPE and counted in `excluded_cells`.
struct ErrorReport {
    std::vector<MetricRow> by_age;
    std::vector<MetricRow> by_year;
    MetricRow avg_across_ages;   // mean of by_age
    MetricRow avg_across_years;  // mean of by_year
    int excluded_cells = 0;
};

ErrorReport error_metrics(const Eigen::MatrixXd& observed_log, const Eigen::MatrixXd& fitted_log);
ErrorReport error_metrics(const MortalitySurface& observed, const Eigen::MatrixXd& fitted_log);

// ---------------------------------------------------------------------------
// Residual diagnostics
// ---------------------------------------------------------------------------

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int n = 0;
};

/// One-sample two-sided t-test of zero mean.
TestResult t_test_zero_mean(std::span<const double> sample);

/// Shapiro-Wilk W with Royston's p-value approximation, 3 <= n <= 5000.
TestResult normality_test(std::span<const double> sample);

/// Evenly strided subsample of at most `max_n` values (keeps the first element).
std::vector<double> strided_subsample(std::span<const double> values, std::size_t max_n);

// ---------------------------------------------------------------------------
// Model facade shared by the CLI and the backtest harness
// ---------------------------------------------------------------------------

enum class ModelKind { lc, lcs, fdm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelSettings {
    SmoothConfig smooth;
    int num_components = 4;
    TsSpec ts;
    double level = 95.0;
    /// When set, FDM intervals come from the residual bootstrap.
    std::optional<int> bootstrap_replicates;
    std::uint64_t seed = 1;
};

/// In-sample fit of one model with its diagnostics against the observed log rates.
struct ModelFit {
    ModelKind kind = ModelKind::lc;
    std::optional<LcModel> lc;
    std::optional<FdmModel> fdm;
    Eigen::MatrixXd fitted_log;  // ages x years
    Eigen::MatrixXd residuals;   // ln m - fitted
    /// Explained share(s): one entry for LC/LCS, K entries for FDM.
    std::vector<double> explained;
    ErrorReport errors;
    TestResult t_test;
    TestResult normality;
};

ModelFit fit_model(const MortalitySurface& surface, ModelKind kind, const ModelSettings& settings);

ForecastSurface forecast_model(const ModelFit& fit, int horizon, const ModelSettings& settings);

// ---------------------------------------------------------------------------
// Backtesting
// ---------------------------------------------------------------------------

struct ModelBacktest {
    ModelKind kind = ModelKind::lc;
    ForecastSurface forecast;          // horizons covering the test window
    Eigen::MatrixXd errors;            // observed - forecast log rate, ages x test years
    Eigen::VectorXd mean_error_by_age;
    Eigen::VectorXd sd_error_by_age;
    // Life expectancy at birth; empty unless the surface starts at age 0.
    std::vector<double> observed_e0;
    std::vector<double> forecast_e0;
    std::vector<double> e0_errors;     // forecast - observed
    double e0_error_mean = 0.0;
    double e0_error_variance = 0.0;
    std::vector<E0Point> e0_intervals;
};

struct BacktestReport {
    Window train;
    Window test;
    std::vector<ModelBacktest> models;

    const ModelBacktest& model(ModelKind kind) const;
};

/// Fits each model on the train window only, forecasts through the test
/// window and scores the forecasts against the observed test rates.
BacktestReport run_backtest(const MortalitySurface& surface, const std::vector<ModelKind>& models, Window train,
                            Window test, const ModelSettings& settings,
                            QMethod q_method = QMethod::constant_hazard);

}  // namespace mortality
