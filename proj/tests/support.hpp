#pragma once

// Shared fixtures for the unit, integration and acceptance suites.

#include "mortality/surface.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace mortality::testing {

/// Mortality surface resembling a national population: infant mortality,
/// accident hump and Gompertz slope, a declining period index and noise
/// that grows at the oldest ages.
inline MortalitySurface synthetic_population(Window ages, Window years, Gender gender, unsigned seed,
                                             double noise_scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool male = gender == Gender::male;
    Eigen::MatrixXd rates(ages.size(), years.size());
    double kappa = 0.0;
    for (int j = 0; j < years.size(); ++j) {
        if (j > 0) kappa += -0.9 + 0.6 * normal(rng);
        for (int i = 0; i < ages.size(); ++i) {
            const double x = ages.first + i;
            const double base = 0.03 * std::exp(-1.2 * x) + 0.0004 +
                                (male ? 0.0012 : 0.0003) * std::exp(-std::pow((x - 22.0) / 7.0, 2.0)) +
                                (male ? 4e-5 : 2e-5) * std::exp(0.095 * x);
            const double b = (0.02 * std::exp(-x / 15.0) + 0.006 + 0.004 * std::exp(-std::pow((x - 70.0) / 20.0, 2.0)));
            const double sd = noise_scale * (0.02 + (x > 80.0 ? 0.012 * (x - 80.0) : 0.0) + (x < 10.0 ? 0.05 : 0.0));
            rates(i, j) = std::exp(std::log(base) + b * kappa + sd * normal(rng));
        }
    }
    return MortalitySurface(ages, years, std::move(rates), gender);
}

/// Renders male/female surfaces in the HMD Mx_1x1 layout, padding ages up
/// to 110+ with fixed rates.
inline std::string to_hmd_text(const MortalitySurface& female, const MortalitySurface& male) {
    std::ostringstream o;
    o << "Italy, Death rates (period 1x1)  \tLast modified: 01 Jan 2010;  Methods Protocol: v5 (2007)\n\n";
    o << "   Year          Age             Female            Male           Total\n";
    for (int y = female.years().first; y <= female.years().last; ++y) {
        for (int a = female.ages().first; a <= 110; ++a) {
            double f, m;
            if (a <= female.ages().last) {
                f = female.rate(a, y);
                m = male.rate(a, y);
            } else {
                f = 0.5;
                m = 0.6;
            }
            char buf[160];
            std::string age = a == 110 ? "110+" : std::to_string(a);
            std::snprintf(buf, sizeof buf, "   %4d  %10s  %15.6f  %14.6f  %14.6f\n", y, age.c_str(), f, m,
                          0.5 * (f + m));
            o << buf;
        }
    }
    return o.str();
}

}  // namespace mortality::testing
