#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace mortality {

enum class TsFamily { rwd, arima };

/// Univariate model for a coefficient series. `rwd` is ARIMA(0,1,0) with drift.
struct TsSpec {
    TsFamily family = TsFamily::rwd;
    int p = 0;  // AR order (arima only)
    int d = 1;  // differencing order, 0 or 1 (arima only)
    bool include_drift = true;
    /// Include the variance of the estimated drift in forecast variances.
    bool drift_uncertainty = true;

    static TsSpec rwd() { return {}; }
    static TsSpec ar(int p, int d, bool drift) { return {TsFamily::arima, p, d, drift, true}; }

    /// Parses `rwd` or `ar:p,d[,drift]`.
    static TsSpec parse(std::string_view text);
    std::string to_string() const;
};

struct TsFit {
    TsSpec spec;
    double drift = 0.0;              // mean of the (differenced) series when include_drift
    std::vector<double> ar_coeffs;
    double innovation_variance = 0.0;
    int n = 0;                        // length of the original series
    std::vector<double> residuals;    // innovations over the usable sample
    std::vector<double> history;      // original series
    bool explosive = false;           // fitted AR polynomial has a root on/inside the unit circle
};

struct TsForecast {
    std::vector<double> point;     // horizons 1..h
    std::vector<double> variance;  // forecast-error variance per horizon
};

TsFit fit_rwd(const std::vector<double>& series);
TsForecast forecast_rwd(const TsFit& fit, int h);

/// Conditional least squares AR(p) on the d-times differenced, drift-removed series.
TsFit fit_ar(const std::vector<double>& series, const TsSpec& spec);
TsForecast forecast_ar(const TsFit& fit, int h);

/// Dispatches on spec.family.
TsFit fit_series(const std::vector<double>& series, const TsSpec& spec);
TsForecast forecast_series(const TsFit& fit, int h);

}  // namespace mortality
