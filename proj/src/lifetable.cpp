#include "mortality/lifetable.hpp"

#include "mortality/error.hpp"
#include "mortality/surface.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace mortality {

QMethod parse_q_method(std::string_view text) {
    if (text == "constant-hazard") return QMethod::constant_hazard;
    if (text == "actuarial") return QMethod::actuarial;
    throw DataError("unknown q method '" + std::string(text) + "' (expected constant-hazard or actuarial)");
}

LifeTable rates_to_lifetable(std::span<const double> mx, QMethod method) {
    if (mx.empty()) throw NumericError("life table needs at least one age");
    const std::size_t n = mx.size();
    LifeTable t;
    t.ages.resize(n);
    t.qx.resize(n);
    t.lx.resize(n);
    t.Lx.resize(n);
    double l = 1.0;
    for (std::size_t x = 0; x < n; ++x) {
        const double m = mx[x];
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw NumericError("life table: rate at age " + std::to_string(x) + " must be finite and positive");
        }
        t.ages[x] = static_cast<int>(x);
        t.lx[x] = l;
        if (x + 1 == n) {
            t.qx[x] = 1.0;
            t.Lx[x] = l / m;
        } else {
            double q = method == QMethod::constant_hazard ? -std::expm1(-m) : std::min(1.0, m / (1.0 + 0.5 * m));
            double deaths = l * q;
            t.qx[x] = q;
            t.Lx[x] = l - 0.5 * deaths;
            l -= deaths;
        }
        t.e0 += t.Lx[x];
    }
    return t;
}

double life_expectancy(std::span<const double> mx, QMethod method) {
    return rates_to_lifetable(mx, method).e0;
}

std::vector<E0Point> e0_path(const ForecastSurface& forecast, QMethod method) {
    if (forecast.ages.first != 0) throw NumericError("e0 path needs forecasts starting at age 0");
    std::vector<E0Point> out;
    const Eigen::Index n = forecast.point.rows();
    std::vector<double> m(n);
    auto e0_of = [&](const Eigen::MatrixXd& logm, int h) {
        for (Eigen::Index x = 0; x < n; ++x) m[x] = std::exp(logm(x, h));
        return life_expectancy(m, method);
    };
    for (int h = 0; h < forecast.horizon(); ++h) {
        E0Point e;
        e.year = forecast.years.first + h;
        e.point = e0_of(forecast.point, h);
        e.lower = e0_of(forecast.upper, h);
        e.upper = e0_of(forecast.lower, h);
        out.push_back(e);
    }
    return out;
}

void write_lifetable_csv(std::ostream& out, const LifeTable& table) {
    out << "age,qx,lx,Lx\n";
    for (std::size_t i = 0; i < table.ages.size(); ++i) {
        out << table.ages[i] << ',' << format_double(table.qx[i]) << ',' << format_double(table.lx[i]) << ','
            << format_double(table.Lx[i]) << '\n';
    }
    out << "e0,,," << format_double(table.e0) << '\n';
}

}  // namespace mortality
