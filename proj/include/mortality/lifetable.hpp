#pragma once

#include "mortality/forecast.hpp"

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace mortality {

/// Conversion of central death rates to one-year death probabilities.
enum class QMethod {
    constant_hazard,  // q = 1 - exp(-m)
    actuarial,        // q = m / (1 + m/2), capped at 1
};

QMethod parse_q_method(std::string_view text);

/// Period life table from age 0 with an open-ended last age group.
struct LifeTable {
    std::vector<int> ages;
    std::vector<double> qx;
    std::vector<double> lx;
    std::vector<double> Lx;
    double e0 = 0.0;
};

LifeTable rates_to_lifetable(std::span<const double> mx, QMethod method = QMethod::constant_hazard);

double life_expectancy(std::span<const double> mx, QMethod method = QMethod::constant_hazard);

struct E0Point {
    int year = 0;
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// e0 per forecast horizon. Bounds come from plugging the mortality interval
/// envelopes in: the upper rate bound gives the lower e0 bound.
std::vector<E0Point> e0_path(const ForecastSurface& forecast, QMethod method = QMethod::constant_hazard);

/// `age,qx,lx,Lx` rows followed by a summary row `e0,,,<value>`.
void write_lifetable_csv(std::ostream& out, const LifeTable& table);

}  // namespace mortality
