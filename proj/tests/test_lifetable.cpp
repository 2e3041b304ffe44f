#include "mortality/error.hpp"
#include "mortality/lifetable.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace mortality;

namespace {

// Survival under a piecewise-constant hazard integrated with a fine midpoint
// rule over each year, plus the open interval l_A / m_A.
double integrate_e0(const std::vector<double>& mx) {
    const int steps = 2000;
    double e0 = 0.0, log_l = 0.0;
    for (std::size_t x = 0; x + 1 < mx.size(); ++x) {
        for (int s = 0; s < steps; ++s) {
            double t = (s + 0.5) / steps;
            e0 += std::exp(log_l - mx[x] * t) / steps;
        }
        log_l -= mx[x];
    }
    return e0 + std::exp(log_l) / mx.back();
}

std::vector<double> gompertz(double scale) {
    std::vector<double> m(101);
    for (int x = 0; x <= 100; ++x) m[x] = scale * (0.003 * std::exp(-x) + 0.0002 + 3e-5 * std::exp(0.1 * x));
    return m;
}

ForecastSurface forecast_from(const std::vector<double>& base, int horizon, double spread_growth) {
    ForecastSurface fc;
    fc.ages = {0, 100};
    fc.years = {2001, 2000 + horizon};
    fc.point.resize(101, horizon);
    fc.lower.resize(101, horizon);
    fc.upper.resize(101, horizon);
    fc.variance.resize(101, horizon);
    for (int h = 0; h < horizon; ++h) {
        for (int x = 0; x <= 100; ++x) {
            double lp = std::log(base[x]) - 0.01 * h;
            double w = spread_growth * (h + 1);
            fc.point(x, h) = lp;
            fc.lower(x, h) = lp - w;
            fc.upper(x, h) = lp + w;
            fc.variance(x, h) = w * w;
        }
    }
    return fc;
}

}  // namespace

TEST_CASE("rates_to_lifetable: constant hazard matches numerical integration") {
    std::vector<double> m(101, 0.01);
    auto lt = rates_to_lifetable(m);
    double exact = (1.0 - std::exp(-1.0)) / 0.01 + std::exp(-1.0) / 0.01;
    CHECK(std::abs(lt.e0 - integrate_e0(m)) < 0.01);
    CHECK(std::abs(lt.e0 - exact) < 0.01);

    auto g = gompertz(1.0);
    CHECK(std::abs(life_expectancy(g) - integrate_e0(g)) < 0.01);
}

TEST_CASE("rates_to_lifetable: table invariants") {
    auto lt = rates_to_lifetable(gompertz(1.0));
    REQUIRE(lt.ages.size() == 101);
    CHECK(lt.lx[0] == 1.0);
    for (std::size_t i = 0; i + 1 < lt.qx.size(); ++i) {
        CHECK(lt.qx[i] > 0.0);
        CHECK(lt.qx[i] < 1.0);
        if (i > 0) CHECK(lt.lx[i] <= lt.lx[i - 1]);
    }
    // Everyone alive at the open age eventually dies in it.
    CHECK(lt.qx.back() == 1.0);
    double sum = 0.0;
    for (double v : lt.Lx) sum += v;
    CHECK(lt.e0 == doctest::Approx(sum));
    CHECK(lt.Lx.back() == doctest::Approx(lt.lx.back() / gompertz(1.0).back()));
}

TEST_CASE("rates_to_lifetable: limiting and monotone behaviour") {
    std::vector<double> huge(101, 50.0);
    CHECK(life_expectancy(huge) == doctest::Approx(0.5).epsilon(1e-6));

    double prev = life_expectancy(gompertz(1.0));
    for (double gamma : {0.9, 0.7, 0.5}) {
        double e = life_expectancy(gompertz(gamma));
        CHECK(e > prev);
        prev = e;
    }

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        auto base = gompertz(1.0);
        auto worse = base;
        for (auto& v : worse) v *= u(rng);
        CHECK(life_expectancy(worse) <= life_expectancy(base));
    }
}

TEST_CASE("rates_to_lifetable: actuarial conversion and errors") {
    auto g = gompertz(1.0);
    auto lt = rates_to_lifetable(g, QMethod::actuarial);
    CHECK(lt.qx[50] == doctest::Approx(g[50] / (1.0 + 0.5 * g[50])));
    CHECK(std::abs(lt.e0 - life_expectancy(g)) < 0.05);
    CHECK(parse_q_method("actuarial") == QMethod::actuarial);
    CHECK(parse_q_method("constant-hazard") == QMethod::constant_hazard);
    CHECK_THROWS_AS(parse_q_method("other"), DataError);

    std::vector<double> bad(10, 0.01);
    bad[4] = 0.0;
    CHECK_THROWS_AS(rates_to_lifetable(bad), NumericError);
}

TEST_CASE("e0_path: degenerate, ordered and widening intervals") {
    auto base = gompertz(1.0);
    auto flat = forecast_from(base, 5, 0.0);
    for (const auto& p : e0_path(flat)) {
        CHECK(p.lower == p.point);
        CHECK(p.upper == p.point);
    }

    auto wide = forecast_from(base, 20, 0.02);
    auto path = e0_path(wide);
    REQUIRE(path.size() == 20);
    CHECK(path[0].year == 2001);
    for (std::size_t h = 0; h < path.size(); ++h) {
        CHECK(path[h].lower <= path[h].point);
        CHECK(path[h].point <= path[h].upper);
        if (h > 0) CHECK(path[h].upper - path[h].lower >= path[h - 1].upper - path[h - 1].lower);
    }

    ForecastSurface partial = wide;
    partial.ages = {1, 101};
    CHECK_THROWS_AS(e0_path(partial), NumericError);
}

TEST_CASE("write_lifetable_csv layout") {
    std::vector<double> m(3, 0.1);
    auto lt = rates_to_lifetable(m);
    std::ostringstream out;
    write_lifetable_csv(out, lt);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "age,qx,lx,Lx");
    int rows = 0;
    std::string last;
    while (std::getline(in, line)) {
        ++rows;
        last = line;
    }
    CHECK(rows == 4);
    CHECK(last.rfind("e0,,,", 0) == 0);
}
