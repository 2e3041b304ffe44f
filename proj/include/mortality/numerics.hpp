#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mortality {

struct SvdResult {
    Eigen::VectorXd singular_values;  // descending, nonnegative
    Eigen::MatrixXd left_vectors;     // rows x min(rows, cols), orthonormal columns
    Eigen::MatrixXd right_vectors;    // cols x min(rows, cols), orthonormal columns
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
SvdResult svd_thin(const Eigen::MatrixXd& a);

/// Clamped B-spline basis over a knot vector.
class BsplineBasis {
public:
    BsplineBasis(std::vector<double> knots, int degree);

    /// `num_basis` functions of the given degree with equally spaced knots
    /// extended `degree` steps beyond [lo, hi] on each side.
    static BsplineBasis uniform(double lo, double hi, int num_basis, int degree = 3);

    const std::vector<double>& knots() const { return knots_; }
    int degree() const { return degree_; }
    int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

    /// Values of every basis function at x (Cox-de Boor). x must lie in
    /// [knots().front(), knots().back()].
    Eigen::VectorXd evaluate(double x) const;

private:
    std::vector<double> knots_;
    int degree_;
};

Eigen::MatrixXd bspline_design(const BsplineBasis& basis, std::span<const double> xs);

/// Order-d difference operator, (n-d) x n.
Eigen::MatrixXd difference_matrix(int n, int order);

struct PenalizedFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd fitted;
    double effective_dof = 0.0;  // trace of the hat matrix
};

/// argmin_theta (y - B theta)' W (y - B theta) + lambda |D_d theta|^2 via
/// QR of the stacked system [sqrt(W) B; sqrt(lambda) D_d]; throws when the normal equations are singular.
PenalizedFit penalized_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& weights, double lambda, int difference_order);

Eigen::VectorXd solve_penalized_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights, double lambda, int difference_order);

double normal_cdf(double z);

/// Inverse standard normal CDF; |error| <= 1e-8 on (0, 1).
double normal_quantile(double p);

/// Sample quantile with linear interpolation between order statistics
/// (the common "type 7" definition). `sorted` must be ascending and non-empty.
double empirical_quantile(std::span<const double> sorted, double p);

}  // namespace mortality
