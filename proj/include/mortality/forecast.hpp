#pragma once

#include "mortality/surface.hpp"

#include <Eigen/Dense>

namespace mortality {

/// Log-rate forecasts per (age, horizon) with variance and interval bounds.
struct ForecastSurface {
    Window ages;
    Window years;  // calendar labels of horizons 1..h
    Eigen::MatrixXd point;     // ages x h, log rates
    Eigen::MatrixXd variance;  // ages x h
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
    double level = 95.0;  // percent

    int horizon() const { return years.size(); }
};

/// Two-sided normal quantile z with P(|Z| <= z) = level / 100.
double interval_multiplier(double level);

/// Fills lower/upper as point -/+ z sqrt(variance).
void apply_normal_intervals(ForecastSurface& fc);

}  // namespace mortality
