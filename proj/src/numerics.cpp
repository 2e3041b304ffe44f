#include "mortality/numerics.hpp"

#include "mortality/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace mortality {

namespace {

constexpr int kMaxJacobiSweeps = 100;
constexpr double kJacobiTol = 1e-15;

// Columns of `u` flagged in `needs` are replaced by unit vectors orthogonal to
// every other column (Gram-Schmidt against the standard basis).
void complete_orthonormal(Eigen::MatrixXd& u, const std::vector<bool>& needs) {
    const Eigen::Index m = u.rows();
    std::vector<Eigen::Index> accepted;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        if (!needs[j]) accepted.push_back(j);
    }
    Eigen::Index next_axis = 0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        if (!needs[j]) continue;
        for (; next_axis < m; ++next_axis) {
            Eigen::VectorXd cand = Eigen::VectorXd::Unit(m, next_axis);
            for (int pass = 0; pass < 2; ++pass) {
                for (auto k : accepted) cand -= u.col(k).dot(cand) * u.col(k);
            }
            double norm = cand.norm();
            if (norm > 0.5) {
                u.col(j) = cand / norm;
                accepted.push_back(j);
                ++next_axis;
                break;
            }
        }
    }
}

SvdResult jacobi_tall(const Eigen::MatrixXd& a) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    Eigen::MatrixXd u = a;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                double alpha = u.col(p).squaredNorm();
                double beta = u.col(q).squaredNorm();
                double gamma = u.col(p).dot(u.col(q));
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (Eigen::Index i = 0; i < m; ++i) {
                    double up = u(i, p), uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    Eigen::VectorXd sigma(n);
    for (Eigen::Index j = 0; j < n; ++j) sigma(j) = u.col(j).norm();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return sigma(x) > sigma(y); });

    SvdResult out;
    out.singular_values.resize(n);
    out.left_vectors.resize(m, n);
    out.right_vectors.resize(n, n);
    const double smax = n > 0 ? sigma(order[0]) : 0.0;
    const double tiny = smax * 1e-13;
    std::vector<bool> needs(n, false);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index j = order[k];
        out.singular_values(k) = sigma(j);
        out.right_vectors.col(k) = v.col(j);
        if (sigma(j) > tiny && sigma(j) > 0.0) {
            out.left_vectors.col(k) = u.col(j) / sigma(j);
        } else {
            out.left_vectors.col(k).setZero();
            needs[k] = true;
        }
    }
    complete_orthonormal(out.left_vectors, needs);
    return out;
}

}  // namespace

SvdResult svd_thin(const Eigen::MatrixXd& a) {
    if (a.rows() < 1 || a.cols() < 1) throw NumericError("svd_thin: empty matrix");
    if (!a.allFinite()) throw NumericError("svd_thin: matrix has non-finite entries");
    if (a.rows() >= a.cols()) return jacobi_tall(a);
    SvdResult t = jacobi_tall(a.transpose());
    std::swap(t.left_vectors, t.right_vectors);
    return t;
}

BsplineBasis::BsplineBasis(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw NumericError("B-spline degree must be nonnegative");
    if (static_cast<int>(knots_.size()) < degree_ + 2) {
        throw NumericError("B-spline needs at least degree + 2 knots");
    }
    if (!std::is_sorted(knots_.begin(), knots_.end()) || knots_.front() == knots_.back()) {
        throw NumericError("B-spline knots must be ascending with a nonempty span");
    }
}

BsplineBasis BsplineBasis::uniform(double lo, double hi, int num_basis, int degree) {
    if (!(hi > lo)) throw NumericError("B-spline range must satisfy lo < hi");
    int segments = num_basis - degree;
    if (segments < 1) throw NumericError("num_basis must exceed the spline degree");
    double dx = (hi - lo) / segments;
    std::vector<double> knots(num_basis + degree + 1);
    for (int i = 0; i < static_cast<int>(knots.size()); ++i) knots[i] = lo + (i - degree) * dx;
    // Pin the domain ends exactly so the range endpoints never fall outside by rounding.
    knots[degree] = lo;
    knots[num_basis] = hi;
    return BsplineBasis(std::move(knots), degree);
}

Eigen::VectorXd BsplineBasis::evaluate(double x) const {
    const int nk = static_cast<int>(knots_.size());
    if (!(x >= knots_.front() && x <= knots_.back())) {
        throw NumericError("B-spline evaluation point " + std::to_string(x) + " outside knot span [" +
                           std::to_string(knots_.front()) + ", " + std::to_string(knots_.back()) + "]");
    }
    // Degree-0 indicators; the right end belongs to the last nonempty interval.
    std::vector<double> n(nk - 1, 0.0);
    int span = -1;
    for (int j = 0; j < nk - 1; ++j) {
        if (knots_[j] <= x && x < knots_[j + 1]) {
            span = j;
            break;
        }
    }
    if (span < 0) {
        for (int j = nk - 2; j >= 0; --j) {
            if (knots_[j] < knots_[j + 1]) {
                span = j;
                break;
            }
        }
    }
    n[span] = 1.0;
    for (int k = 1; k <= degree_; ++k) {
        for (int j = 0; j < nk - 1 - k; ++j) {
            double left = 0.0, right = 0.0;
            double d1 = knots_[j + k] - knots_[j];
            double d2 = knots_[j + k + 1] - knots_[j + 1];
            if (d1 > 0.0) left = (x - knots_[j]) / d1 * n[j];
            if (d2 > 0.0) right = (knots_[j + k + 1] - x) / d2 * n[j + 1];
            n[j] = left + right;
        }
    }
    Eigen::VectorXd out(num_basis());
    for (int j = 0; j < num_basis(); ++j) out(j) = n[j];
    return out;
}

Eigen::MatrixXd bspline_design(const BsplineBasis& basis, std::span<const double> xs) {
    Eigen::MatrixXd b(static_cast<Eigen::Index>(xs.size()), basis.num_basis());
    for (std::size_t i = 0; i < xs.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = basis.evaluate(xs[i]);
    return b;
}

Eigen::MatrixXd difference_matrix(int n, int order) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < order; ++k) {
        Eigen::MatrixXd next = d.bottomRows(d.rows() - 1) - d.topRows(d.rows() - 1);
        d = std::move(next);
    }
    return d;
}

PenalizedFit penalized_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& weights, double lambda, int difference_order) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (y.size() != n || weights.size() != n) {
        throw NumericError("penalized fit: design rows, observations and weights must agree in length");
    }
    if (difference_order < 1 || difference_order > 3) {
        throw NumericError("penalized fit: difference order must be 1, 2 or 3");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw NumericError("penalized fit: lambda must be >= 0");
    if ((weights.array() < 0.0).any()) throw NumericError("penalized fit: weights must be nonnegative");
    if (p <= difference_order) {
        throw NumericError("penalized fit: need more coefficients than the difference order");
    }

    Eigen::MatrixXd btw = design.transpose() * weights.asDiagonal();
    Eigen::MatrixXd gram = btw * design;
    Eigen::MatrixXd dmat = difference_matrix(static_cast<int>(p), difference_order);
    Eigen::MatrixXd system = gram + lambda * (dmat.transpose() * dmat);

    Eigen::LLT<Eigen::MatrixXd> llt(system);
    bool singular = llt.info() != Eigen::Success;
    if (!singular) {
        Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
        double lo = diag.minCoeff(), hi = diag.maxCoeff();
        singular = !(lo > 0.0) || (lo / hi) * (lo / hi) < 1e-15;
    }
    if (singular) {
        throw NumericError(
            "penalized fit: normal equations are singular; use a larger lambda or fewer basis functions");
    }

    // Coefficients from QR of the stacked least-squares problem, which stays
    // accurate when lambda dominates the normal equations.
    Eigen::MatrixXd stacked(n + dmat.rows(), p);
    Eigen::VectorXd sqrt_w = weights.cwiseSqrt();
    stacked.topRows(n) = sqrt_w.asDiagonal() * design;
    stacked.bottomRows(dmat.rows()) = std::sqrt(lambda) * dmat;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(stacked.rows());
    rhs.head(n) = sqrt_w.cwiseProduct(y);

    PenalizedFit fit;
    fit.coefficients = stacked.householderQr().solve(rhs);
    fit.fitted = design * fit.coefficients;
    fit.effective_dof = llt.solve(gram).trace();
    return fit;
}

Eigen::VectorXd solve_penalized_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights, double lambda, int difference_order) {
    return penalized_fit(design, y, weights, lambda, difference_order).coefficients;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw NumericError("normal_quantile: p must lie in (0, 1)");

    // Acklam's rational approximation, relative error ~1.2e-9 before refinement.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley step on Phi(x) - p. Work in the lower tail to avoid cancellation.
    const bool upper = x > 0.0;
    const double xt = upper ? -x : x;
    const double pt = upper ? 1.0 - p : p;
    double e = normal_cdf(xt) - pt;
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * xt * xt);
    double refined = xt - u / (1.0 + 0.5 * xt * u);
    return upper ? -refined : refined;
}

double empirical_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw NumericError("empirical_quantile: empty sample");
    double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace mortality
