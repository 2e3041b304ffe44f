#include "mortality/error.hpp"
#include "mortality/fdm.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mortality;

namespace {

constexpr double kZ975 = 1.959963984540054;

// Hand formula for the RWD forecast variance of a coefficient series.
double rwd_variance(const Eigen::VectorXd& series, int h) {
    const Eigen::Index n = series.size();
    double drift = (series(n - 1) - series(0)) / static_cast<double>(n - 1);
    double ss = 0.0;
    for (Eigen::Index t = 1; t < n; ++t) ss += std::pow(series(t) - series(t - 1) - drift, 2);
    double s2 = ss / static_cast<double>(n - 2);
    return h * s2 + static_cast<double>(h) * h * s2 / static_cast<double>(n - 1);
}

// Coefficient paths as Gaussian random walks with drift, observed through
// smooth age shapes plus small independent model error.
FdmModel gaussian_model(unsigned seed, int n_ages, int n_years, int k) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd f(n_ages, n_years);
    Eigen::MatrixXd shapes(n_ages, 3);
    for (int x = 0; x < n_ages; ++x) {
        double u = x / static_cast<double>(n_ages - 1);
        shapes.row(x) << 0.5 + u, std::sin(3.0 * u), std::cos(5.0 * u);
    }
    Eigen::MatrixXd coef(3, n_years);
    coef.col(0).setZero();
    for (int t = 1; t < n_years; ++t) {
        coef(0, t) = coef(0, t - 1) - 0.3 + 0.2 * n(rng);
        coef(1, t) = coef(1, t - 1) + 0.1 * n(rng);
        coef(2, t) = coef(2, t - 1) + 0.05 * n(rng);
    }
    for (int t = 0; t < n_years; ++t) {
        for (int x = 0; x < n_ages; ++x) f(x, t) = -6.0 + 0.08 * x + shapes.row(x).dot(coef.col(t)) + 0.01 * n(rng);
    }
    Eigen::VectorXd sigma2 = Eigen::VectorXd::Constant(n_ages, 0.0004);
    return fit_fdm_smoothed(f, sigma2, {0, n_ages - 1}, {1950, 1950 + n_years - 1}, k);
}

}  // namespace

TEST_CASE("fit_fdm_smoothed: recovers two orthonormal components") {
    const int na = 8, ny = 10;
    Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(na, -7.0, -2.0);
    Eigen::VectorXd p1 = Eigen::VectorXd::Ones(na).normalized();
    Eigen::VectorXd p2 = Eigen::VectorXd::LinSpaced(na, -1.0, 1.0).normalized();
    Eigen::VectorXd b1(ny), b2(ny);
    for (int t = 0; t < ny; ++t) {
        b1(t) = 3.0 * (t - 4.5);
        b2(t) = (t - 4.5) * (t - 4.5) - 8.25;
    }
    b2 -= b2.dot(b1) / b1.squaredNorm() * b1;
    Eigen::MatrixXd f = (p1 * b1.transpose() + p2 * b2.transpose()).colwise() + mu;

    auto m = fit_fdm_smoothed(f, Eigen::VectorXd::Zero(na), {50, 57}, {1990, 1999}, 2);
    double total = b1.squaredNorm() + b2.squaredNorm();
    CHECK(m.explained_shares[0] == doctest::Approx(b1.squaredNorm() / total).epsilon(1e-10));
    CHECK(m.explained_shares[1] == doctest::Approx(b2.squaredNorm() / total).epsilon(1e-10));
    CHECK(m.v.cwiseAbs().maxCoeff() < 1e-20);
    CHECK((m.mu - mu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(std::abs(m.phi.col(0).dot(p1)) - 1.0) < 1e-10);
}

TEST_CASE("fit_fdm: structural invariants on realistic data") {
    auto s = testing::synthetic_population({0, 100}, {1950, 2000}, Gender::female, 41);
    auto m = fit_fdm(s, SmoothConfig{}, 4);
    CHECK(m.num_components == 4);
    Eigen::MatrixXd gram = m.phi.transpose() * m.phi;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(m.beta.col(k).sum()) < 1e-10);
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        CHECK(m.explained_shares[k] >= 0.0);
        CHECK(m.explained_shares[k] <= 1.0);
        if (k > 0) CHECK(m.explained_shares[k] <= m.explained_shares[k - 1]);
        sum += m.explained_shares[k];
    }
    CHECK(sum <= 1.0 + 1e-12);

    Eigen::MatrixXd recon = m.fitted_log_rates() + m.model_residuals;
    CHECK((recon - m.smoothed).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((m.sigma2_mu - m.v / 51.0).cwiseAbs().maxCoeff() < 1e-15);

    double prev = 0.0;
    for (int k = 1; k <= 6; ++k) {
        auto mk = fit_fdm_smoothed(m.smoothed, m.sigma2, m.ages, m.years, k);
        double total = 0.0;
        for (double e : mk.explained_shares) total += e;
        CHECK(total >= prev - 1e-12);
        prev = total;
    }
}

TEST_CASE("fit_fdm_smoothed: full rank leaves no residual") {
    Eigen::MatrixXd f(5, 7);
    for (int x = 0; x < 5; ++x)
        for (int t = 0; t < 7; ++t) f(x, t) = std::sin(1.1 * x + 0.3 * t * t) + 0.2 * x;
    auto m = fit_fdm_smoothed(f, Eigen::VectorXd::Zero(5), {0, 4}, {2000, 2006}, 4);
    CHECK(m.model_residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_fdm: K outside range") {
    Eigen::MatrixXd f = Eigen::MatrixXd::Random(5, 4);
    Eigen::VectorXd s2 = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(fit_fdm_smoothed(f, s2, {0, 4}, {2000, 2003}, 0), NumericError);
    CHECK_THROWS_AS(fit_fdm_smoothed(f, s2, {0, 4}, {2000, 2003}, 4), NumericError);
    CHECK_NOTHROW(fit_fdm_smoothed(f, s2, {0, 4}, {2000, 2003}, 3));
}

TEST_CASE("forecast_fdm: zero-variance model gives a degenerate interval") {
    Eigen::MatrixXd f(4, 6);
    for (int t = 0; t < 6; ++t) f.col(t) << -6.0, -5.0, -4.0, -3.0;
    auto m = fit_fdm_smoothed(f, Eigen::VectorXd::Zero(4), {80, 83}, {2000, 2005}, 2);
    auto fc = forecast_fdm(m, TsSpec::rwd(), 5, 95.0);
    auto bs = bootstrap_intervals(m, TsSpec::rwd(), 5, 95.0, 200, 3);
    for (int h = 0; h < 5; ++h) {
        CHECK((fc.point.col(h) - f.col(0)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((fc.upper.col(h) - fc.lower.col(h)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((bs.upper.col(h) - bs.lower.col(h)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("forecast_fdm: K = 1 with linear coefficients continues the line") {
    Eigen::VectorXd mu(3), phi(3);
    mu << -5.0, -4.0, -3.0;
    phi << 0.6, 0.0, 0.8;
    Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(6, 2.5, -2.5);
    Eigen::MatrixXd f = (phi * beta.transpose()).colwise() + mu;
    auto m = fit_fdm_smoothed(f, Eigen::VectorXd::Zero(3), {0, 2}, {2000, 2005}, 1);
    auto fc = forecast_fdm(m, TsSpec::rwd(), 4, 95.0);
    for (int h = 1; h <= 4; ++h) {
        Eigen::VectorXd expected = mu + (-2.5 - 1.0 * h) * phi;
        CHECK((fc.point.col(h - 1) - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("forecast_fdm: variance equals the term-by-term sum") {
    Eigen::MatrixXd f(3, 6);
    f << -6.0, -6.1, -6.3, -6.2, -6.5, -6.6,
         -4.0, -4.2, -4.1, -4.4, -4.5, -4.7,
         -2.0, -2.0, -2.2, -2.1, -2.3, -2.2;
    Eigen::VectorXd sigma2(3);
    sigma2 << 0.01, 0.02, 0.03;
    auto m = fit_fdm_smoothed(f, sigma2, {60, 62}, {2000, 2005}, 2);

    // Independent decomposition with Eigen's SVD.
    Eigen::VectorXd mu = f.rowwise().mean();
    Eigen::MatrixXd centered = f.colwise() - mu;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd phi = svd.matrixU().leftCols(2);
    Eigen::MatrixXd beta = centered.transpose() * phi;
    Eigen::MatrixXd resid = centered - phi * beta.transpose();
    Eigen::VectorXd v = resid.array().square().rowwise().mean();

    auto fc = forecast_fdm(m, TsSpec::rwd(), 4, 95.0);
    for (int h = 1; h <= 4; ++h) {
        for (int x = 0; x < 3; ++x) {
            double zeta = v(x) / 6.0 + v(x) + sigma2(x);
            for (int k = 0; k < 2; ++k) zeta += rwd_variance(beta.col(k), h) * phi(x, k) * phi(x, k);
            CHECK(fc.variance(x, h - 1) == doctest::Approx(zeta).epsilon(1e-10));
            CHECK(fc.upper(x, h - 1) - fc.point(x, h - 1) == doctest::Approx(kZ975 * std::sqrt(zeta)).epsilon(1e-10));
        }
    }
}

TEST_CASE("forecast_fdm: invariant under component sign flips and nondecreasing in h") {
    auto m = gaussian_model(42, 20, 30, 3);
    auto ref = forecast_fdm(m, TsSpec::rwd(), 15, 95.0);
    FdmModel flipped = m;
    flipped.phi.col(1) *= -1.0;
    flipped.beta.col(1) *= -1.0;
    flipped.phi.col(2) *= -1.0;
    flipped.beta.col(2) *= -1.0;
    auto fc = forecast_fdm(flipped, TsSpec::rwd(), 15, 95.0);
    CHECK((fc.point - ref.point).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fc.variance - ref.variance).cwiseAbs().maxCoeff() < 1e-12);

    for (int h = 1; h < 15; ++h) CHECK((ref.variance.col(h) - ref.variance.col(h - 1)).minCoeff() >= 0.0);
    CHECK((ref.lower.array() <= ref.point.array()).all());
    CHECK((ref.point.array() <= ref.upper.array()).all());
}

TEST_CASE("bootstrap_intervals: agrees with analytic widths on Gaussian data") {
    auto m = gaussian_model(7, 25, 40, 3);
    auto analytic = forecast_fdm(m, TsSpec::rwd(), 10, 95.0);
    auto bs = bootstrap_intervals(m, TsSpec::rwd(), 10, 95.0, 2000, 11);
    CHECK(bs.point == analytic.point);
    Eigen::MatrixXd wa = analytic.upper - analytic.lower;
    Eigen::MatrixXd wb = bs.upper - bs.lower;
    Eigen::MatrixXd rel = ((wb - wa).array() / wa.array()).abs().matrix();
    CHECK(rel.maxCoeff() <= 0.15);
    CHECK((bs.lower.array() <= bs.point.array()).all());
    CHECK((bs.point.array() <= bs.upper.array()).all());
}

TEST_CASE("bootstrap_intervals: deterministic per seed") {
    auto m = gaussian_model(9, 12, 25, 2);
    auto a = bootstrap_intervals(m, TsSpec::rwd(), 6, 90.0, 300, 123);
    auto b = bootstrap_intervals(m, TsSpec::rwd(), 6, 90.0, 300, 123);
    auto c = bootstrap_intervals(m, TsSpec::rwd(), 6, 90.0, 300, 124);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.upper != c.upper);

    auto ar = bootstrap_intervals(m, TsSpec::ar(1, 1, true), 6, 90.0, 300, 5);
    CHECK(ar.upper.allFinite());
    CHECK_THROWS_AS(bootstrap_intervals(m, TsSpec::rwd(), 6, 90.0, 99, 1), NumericError);
}
