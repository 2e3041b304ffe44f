#include "mortality/error.hpp"
#include "mortality/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace mortality;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd a(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) a(i, j) = n(rng);
    return a;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Direct recursive Cox-de Boor definition of the i-th basis function.
double cox_de_boor(const std::vector<double>& t, int i, int k, double x) {
    if (k == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
    double a = 0.0, b = 0.0;
    if (t[i + k] > t[i]) a = (x - t[i]) / (t[i + k] - t[i]) * cox_de_boor(t, i, k - 1, x);
    if (t[i + k + 1] > t[i + 1]) b = (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * cox_de_boor(t, i + 1, k - 1, x);
    return a + b;
}

// Phi via the Maclaurin series of erf, independent of std::erf.
double phi_series(double z) {
    const double x = z / std::numbers::sqrt2;
    double term = x, sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x * x / n;
        sum += term / (2 * n + 1);
    }
    return 0.5 * (1.0 + 2.0 / std::sqrt(std::numbers::pi) * sum);
}

}  // namespace

TEST_CASE("svd_thin: diagonal matrix") {
    Eigen::MatrixXd a = Eigen::Vector3d(3, 2, 1).asDiagonal();
    auto s = svd_thin(a);
    CHECK(s.singular_values(0) == doctest::Approx(3.0));
    CHECK(s.singular_values(1) == doctest::Approx(2.0));
    CHECK(s.singular_values(2) == doctest::Approx(1.0));
}

TEST_CASE("svd_thin: rank one") {
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(7, 1.0, 4.0);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, -2.0, 3.0);
    auto s = svd_thin(u * v.transpose());
    CHECK(s.singular_values(1) <= 1e-12 * s.singular_values(0));
    // Completed left vectors stay orthonormal.
    Eigen::MatrixXd utu = s.left_vectors.transpose() * s.left_vectors;
    CHECK(max_abs(utu - Eigen::MatrixXd::Identity(5, 5)) < 1e-10);
}

TEST_CASE("svd_thin: random 10x8 against Gram eigendecomposition") {
    Eigen::MatrixXd a = random_matrix(10, 8, 42);
    auto s = svd_thin(a);
    Eigen::MatrixXd recon = s.left_vectors * s.singular_values.asDiagonal() * s.right_vectors.transpose();
    CHECK((a - recon).norm() / a.norm() <= 1e-10);
    CHECK(max_abs(s.left_vectors.transpose() * s.left_vectors - Eigen::MatrixXd::Identity(8, 8)) < 1e-10);
    CHECK(max_abs(s.right_vectors.transpose() * s.right_vectors - Eigen::MatrixXd::Identity(8, 8)) < 1e-10);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
    Eigen::VectorXd ref = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    for (int i = 0; i < 8; ++i) CHECK(s.singular_values(i) == doctest::Approx(ref(i)).epsilon(1e-10));
    for (int i = 1; i < 8; ++i) CHECK(s.singular_values(i - 1) >= s.singular_values(i));
}

TEST_CASE("svd_thin: wide matrices and permutation invariance") {
    Eigen::MatrixXd a = random_matrix(5, 9, 7);
    auto s = svd_thin(a);
    CHECK(s.left_vectors.rows() == 5);
    CHECK(s.right_vectors.rows() == 9);
    Eigen::MatrixXd recon = s.left_vectors * s.singular_values.asDiagonal() * s.right_vectors.transpose();
    CHECK((a - recon).norm() / a.norm() <= 1e-10);

    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd b = random_matrix(12, 6, 100 + trial);
        Eigen::PermutationMatrix<Eigen::Dynamic> pr(12), pc(6);
        pr.setIdentity();
        pc.setIdentity();
        std::shuffle(pr.indices().data(), pr.indices().data() + 12, rng);
        std::shuffle(pc.indices().data(), pc.indices().data() + 6, rng);
        auto s1 = svd_thin(b);
        auto s2 = svd_thin(pr * b * pc);
        for (int i = 0; i < 6; ++i) {
            CHECK(std::abs(s1.singular_values(i) - s2.singular_values(i)) <= 1e-10 * s1.singular_values(0));
        }
    }
}

TEST_CASE("svd_thin: rejects non-finite input") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 2);
    a(0, 1) = std::nan("");
    CHECK_THROWS_AS(svd_thin(a), NumericError);
}

TEST_CASE("bspline_design: degree zero indicator") {
    BsplineBasis basis({0.0, 1.0, 2.0}, 0);
    std::vector<double> xs{0.5};
    auto b = bspline_design(basis, xs);
    CHECK(b(0, 0) == 1.0);
    CHECK(b(0, 1) == 0.0);
}

TEST_CASE("bspline_design: cubic partition of unity and recursive oracle") {
    std::vector<double> knots;
    for (int i = 0; i <= 10; ++i) knots.push_back(i);
    BsplineBasis basis(knots, 3);
    CHECK(basis.num_basis() == 7);

    std::vector<double> xs{5.5};
    auto row = bspline_design(basis, xs);
    for (int j = 0; j < basis.num_basis(); ++j) {
        CHECK(row(0, j) == doctest::Approx(cox_de_boor(knots, j, 3, 5.5)).epsilon(1e-14));
    }

    for (double x = 3.0; x <= 7.0; x += 0.173) {
        std::vector<double> one{x};
        auto r = bspline_design(basis, one);
        CHECK(std::abs(r.sum() - 1.0) <= 1e-12);
        CHECK(r.minCoeff() >= 0.0);
    }

    auto uni = BsplineBasis::uniform(0.0, 100.0, 35);
    for (double x : {0.0, 13.7, 50.0, 99.99, 100.0}) {
        std::vector<double> one{x};
        CHECK(std::abs(bspline_design(uni, one).sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("bspline_design: x outside span") {
    BsplineBasis basis({0.0, 1.0, 2.0, 3.0, 4.0}, 3);
    std::vector<double> xs{4.5};
    CHECK_THROWS_AS(bspline_design(basis, xs), NumericError);
}

TEST_CASE("solve_penalized_ls: unpenalized square system interpolates") {
    Eigen::MatrixXd b = random_matrix(6, 6, 11) + 3.0 * Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
    Eigen::VectorXd theta = solve_penalized_ls(b, y, Eigen::VectorXd::Ones(6), 0.0, 2);
    CHECK((b * theta - y).norm() < 1e-10);
}

TEST_CASE("solve_penalized_ls: heavy second-difference penalty yields the OLS line") {
    const int n = 12;
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = std::sin(1.7 * i) + 0.3 * i;
    Eigen::VectorXd fitted = b * solve_penalized_ls(b, y, Eigen::VectorXd::Ones(n), 1e12, 2);

    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) x.row(i) << 1.0, i;
    Eigen::VectorXd coef = x.colPivHouseholderQr().solve(y);
    CHECK((fitted - x * coef).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solve_penalized_ls: matches a dense normal-equation solve") {
    Eigen::MatrixXd b = random_matrix(6, 5, 5).cwiseAbs();
    Eigen::VectorXd y = random_matrix(6, 1, 6);
    Eigen::VectorXd w(6);
    w << 1.0, 0.5, 2.0, 1.0, 0.0, 1.5;
    Eigen::VectorXd theta = solve_penalized_ls(b, y, w, 1.0, 2);

    // Oracle: explicit second differences and LU of the full system.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 5);
    for (int i = 0; i < 3; ++i) {
        d(i, i) = 1.0;
        d(i, i + 1) = -2.0;
        d(i, i + 2) = 1.0;
    }
    Eigen::MatrixXd sys = b.transpose() * w.asDiagonal() * b + d.transpose() * d;
    Eigen::VectorXd ref = sys.fullPivLu().solve(b.transpose() * w.asDiagonal() * y);
    CHECK((theta - ref).norm() < 1e-10 * ref.norm());
}

TEST_CASE("solve_penalized_ls: singular system and argument errors") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(5, 4);
    b.col(0).setOnes();
    Eigen::VectorXd y = Eigen::VectorXd::Ones(5);
    CHECK_THROWS_AS(solve_penalized_ls(b, y, Eigen::VectorXd::Ones(5), 0.0, 2), NumericError);
    CHECK_THROWS_AS(solve_penalized_ls(b, y, Eigen::VectorXd::Ones(5), 1.0, 4), NumericError);
    CHECK_THROWS_AS(solve_penalized_ls(b, y, Eigen::VectorXd::Ones(4), 1.0, 2), NumericError);
}

TEST_CASE("solve_penalized_ls: penalty norm decreases with lambda") {
    auto basis = BsplineBasis::uniform(0.0, 30.0, 12);
    std::vector<double> xs;
    for (int i = 0; i <= 30; ++i) xs.push_back(i);
    Eigen::MatrixXd b = bspline_design(basis, xs);
    Eigen::VectorXd y = random_matrix(31, 1, 9);
    Eigen::MatrixXd d = difference_matrix(12, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4}) {
        double pen = (d * solve_penalized_ls(b, y, Eigen::VectorXd::Ones(31), lambda, 2)).norm();
        CHECK(pen <= prev * (1.0 + 1e-9));
        prev = pen;
    }
}

TEST_CASE("normal_quantile") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));

    // Bisection on the erf series.
    double lo = 0.0, hi = 5.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (phi_series(mid) < 0.975 ? lo : hi) = mid;
    }
    CHECK(std::abs(normal_quantile(0.975) - lo) <= 1e-8);
    CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) <= 1e-8);

    for (double p : {1e-5, 0.001, 0.02, 0.1, 0.3, 0.45, 0.6, 0.9, 0.99}) {
        CHECK(std::abs(normal_quantile(p) + normal_quantile(1.0 - p)) <= 1e-8);
        CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) <= 1e-12 + 1e-9 * p);
    }
    // Far tail checked on the lower side only; 1 - 1e-10 is not exact in binary.
    CHECK(std::abs(normal_cdf(normal_quantile(1e-10)) - 1e-10) <= 1e-18);
    CHECK_THROWS_AS(normal_quantile(0.0), NumericError);
    CHECK_THROWS_AS(normal_quantile(1.0), NumericError);
    CHECK_THROWS_AS(normal_quantile(-0.2), NumericError);
}

TEST_CASE("empirical_quantile interpolates order statistics") {
    std::vector<double> s{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(empirical_quantile(s, 0.0) == 1.0);
    CHECK(empirical_quantile(s, 1.0) == 5.0);
    CHECK(empirical_quantile(s, 0.5) == 3.0);
    CHECK(empirical_quantile(s, 0.1) == doctest::Approx(1.4));
}
