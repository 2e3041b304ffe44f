#include "mortality/lee_carter.hpp"

#include "mortality/error.hpp"
#include "mortality/numerics.hpp"

#include <cmath>

namespace mortality {

Eigen::MatrixXd LcModel::fitted_log_rates() const {
    return (beta * kappa.transpose()).colwise() + alpha;
}

LcModel fit_lc_log(const Eigen::MatrixXd& log_rates, Window ages, Window years) {
    if (log_rates.rows() < 3 || log_rates.cols() < 3) {
        throw NumericError("Lee-Carter fit needs at least 3 ages and 3 years");
    }
    if (!log_rates.allFinite()) throw NumericError("Lee-Carter fit: log rates must be finite");

    LcModel model;
    model.ages = ages;
    model.years = years;
    model.alpha = log_rates.rowwise().mean();
    const Eigen::MatrixXd centered = log_rates.colwise() - model.alpha;
    const double total_ss = centered.squaredNorm();
    const Eigen::Index n_ages = centered.rows();
    const Eigen::Index n_years = centered.cols();

    // No temporal signal: perfect fit with kappa identically zero.
    if (std::sqrt(total_ss) <= 1e-12 * std::max(1.0, log_rates.norm())) {
        model.beta = Eigen::VectorXd::Constant(n_ages, 1.0 / static_cast<double>(n_ages));
        model.kappa = Eigen::VectorXd::Zero(n_years);
        model.residuals = centered;
        model.explained_variance = 1.0;
        model.explained_variance_rss = 1.0;
        return model;
    }

    SvdResult svd = svd_thin(centered);
    Eigen::VectorXd u1 = svd.left_vectors.col(0);
    Eigen::VectorXd v1 = svd.right_vectors.col(0);
    double s1 = svd.singular_values(0);
    double usum = u1.sum();
    if (std::abs(usum) <= 1e-12 * u1.cwiseAbs().sum()) {
        throw NumericError("Lee-Carter fit is degenerate: leading age vector sums to zero");
    }
    if (usum < 0.0) {
        u1 = -u1;
        v1 = -v1;
        usum = -usum;
    }
    model.beta = u1 / usum;
    model.kappa = s1 * usum * v1;
    // Centering makes sum(kappa) zero analytically; remove rounding drift.
    model.kappa.array() -= model.kappa.mean();
    model.residuals = centered - model.beta * model.kappa.transpose();
    model.explained_variance = s1 * s1 / svd.singular_values.squaredNorm();
    model.explained_variance_rss = 1.0 - model.residuals.squaredNorm() / total_ss;
    return model;
}

LcModel fit_lc(const MortalitySurface& surface) {
    return fit_lc_log(surface.log_rates(), surface.ages(), surface.years());
}

LcModel fit_lcs(const MortalitySurface& surface, const SmoothConfig& config) {
    SmoothSurface smooth = smooth_surface(surface, config);
    LcModel model = fit_lc_log(smooth.values, surface.ages(), surface.years());
    model.variant = LcVariant::lcs;
    return model;
}

ForecastSurface forecast_lc(const LcModel& model, const TsSpec& spec, int horizon, double level) {
    if (horizon < 1) throw NumericError("forecast horizon must be >= 1");
    std::vector<double> kappa(model.kappa.data(), model.kappa.data() + model.kappa.size());
    TsFit fit = fit_series(kappa, spec);
    TsForecast kf = forecast_series(fit, horizon);

    ForecastSurface fc;
    fc.ages = model.ages;
    fc.years = {model.years.last + 1, model.years.last + horizon};
    fc.level = level;
    fc.point.resize(model.alpha.size(), horizon);
    fc.variance.resize(model.alpha.size(), horizon);
    const Eigen::VectorXd beta2 = model.beta.array().square();
    for (int k = 0; k < horizon; ++k) {
        fc.point.col(k) = model.alpha + model.beta * kf.point[k];
        fc.variance.col(k) = beta2 * kf.variance[k];
    }
    apply_normal_intervals(fc);
    return fc;
}

Eigen::MatrixXd standardized_residuals(const Eigen::MatrixXd& residuals) {
    const double n = static_cast<double>(residuals.size());
    const double mean = residuals.mean();
    const double sd = n > 1 ? std::sqrt((residuals.array() - mean).square().sum() / (n - 1.0)) : 0.0;
    if (!(sd > 0.0)) return Eigen::MatrixXd::Zero(residuals.rows(), residuals.cols());
    return residuals / sd;
}

}  // namespace mortality
