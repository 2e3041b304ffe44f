#include "mortality/fdm.hpp"

#include "mortality/error.hpp"
#include "mortality/numerics.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace mortality {

Eigen::MatrixXd FdmModel::fitted_log_rates() const {
    return (phi * beta.transpose()).colwise() + mu;
}

FdmModel fit_fdm_smoothed(const Eigen::MatrixXd& smoothed, const Eigen::VectorXd& sigma2, Window ages,
                          Window years, int num_components) {
    const Eigen::Index n_ages = smoothed.rows();
    const Eigen::Index n_years = smoothed.cols();
    const int max_k = static_cast<int>(std::min(n_ages, n_years)) - 1;
    if (num_components < 1 || num_components > max_k) {
        throw NumericError("number of basis functions K=" + std::to_string(num_components) +
                           " must lie in [1, " + std::to_string(max_k) + "]");
    }
    if (sigma2.size() != n_ages) throw NumericError("FDM fit: sigma2 must have one entry per age");

    FdmModel model;
    model.ages = ages;
    model.years = years;
    model.num_components = num_components;
    model.smoothed = smoothed;
    model.sigma2 = sigma2;
    model.mu = smoothed.rowwise().mean();
    const Eigen::MatrixXd centered = smoothed.colwise() - model.mu;

    SvdResult svd = svd_thin(centered);
    const double total = svd.singular_values.squaredNorm();
    model.phi = svd.left_vectors.leftCols(num_components);
    model.beta.resize(n_years, num_components);
    for (int k = 0; k < num_components; ++k) {
        model.beta.col(k) = svd.singular_values(k) * svd.right_vectors.col(k);
        double s = svd.singular_values(k);
        model.explained_shares.push_back(total > 0.0 ? s * s / total : 0.0);
    }
    model.model_residuals = centered - model.phi * model.beta.transpose();
    model.v = model.model_residuals.array().square().rowwise().mean();
    model.sigma2_mu = model.v / static_cast<double>(n_years);
    return model;
}

FdmModel fit_fdm(const MortalitySurface& surface, const SmoothConfig& config, int num_components) {
    SmoothSurface smooth = smooth_surface(surface, config);
    return fit_fdm_smoothed(smooth.values, smooth.sigma2, surface.ages(), surface.years(), num_components);
}

namespace {

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
    return {m.col(j).data(), m.col(j).data() + m.rows()};
}

ForecastSurface empty_forecast(const FdmModel& model, int horizon, double level) {
    if (horizon < 1) throw NumericError("forecast horizon must be >= 1");
    ForecastSurface fc;
    fc.ages = model.ages;
    fc.years = {model.years.last + 1, model.years.last + horizon};
    fc.level = level;
    fc.point = Eigen::MatrixXd::Zero(model.mu.size(), horizon);
    fc.variance = Eigen::MatrixXd::Zero(model.mu.size(), horizon);
    return fc;
}

}  // namespace

ForecastSurface forecast_fdm(const FdmModel& model, const TsSpec& spec, int horizon, double level) {
    ForecastSurface fc = empty_forecast(model, horizon, level);
    const Eigen::VectorXd base_var = model.sigma2_mu + model.v + model.sigma2;
    for (int h = 0; h < horizon; ++h) {
        fc.point.col(h) = model.mu;
        fc.variance.col(h) = base_var;
    }
    for (int k = 0; k < model.num_components; ++k) {
        TsFit fit = fit_series(column(model.beta, k), spec);
        TsForecast bf = forecast_series(fit, horizon);
        const Eigen::VectorXd phi_k = model.phi.col(k);
        const Eigen::VectorXd phi2 = phi_k.array().square();
        for (int h = 0; h < horizon; ++h) {
            fc.point.col(h) += bf.point[h] * phi_k;
            fc.variance.col(h) += bf.variance[h] * phi2;
        }
    }
    apply_normal_intervals(fc);
    return fc;
}

namespace {

// One simulated future path of a fitted coefficient series, driven by
// innovations resampled from the fit's residuals.
std::vector<double> simulate_path(const TsFit& fit, int horizon, std::mt19937_64& rng) {
    const bool is_rwd = fit.spec.family == TsFamily::rwd;
    const int d = is_rwd ? 1 : fit.spec.d;
    const bool has_drift = is_rwd || fit.spec.include_drift;
    const auto& phi = fit.ar_coeffs;
    const int p = static_cast<int>(phi.size());
    const auto& res = fit.residuals;
    std::uniform_int_distribution<std::size_t> pick(0, res.size() - 1);

    double drift = fit.drift;
    std::vector<double> w;
    if (d == 1) {
        for (std::size_t t = 1; t < fit.history.size(); ++t) w.push_back(fit.history[t] - fit.history[t - 1] - fit.drift);
    } else {
        for (double x : fit.history) w.push_back(x - fit.drift);
    }
    if (has_drift && fit.spec.drift_uncertainty) {
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) acc += res[pick(rng)];
        double phi_sum = std::accumulate(phi.begin(), phi.end(), 0.0);
        drift += acc / static_cast<double>(w.size()) / (1.0 - phi_sum);
    }

    std::vector<double> path;
    double level = fit.history.back();
    for (int k = 0; k < horizon; ++k) {
        double next = res[pick(rng)];
        for (int i = 1; i <= p; ++i) next += phi[i - 1] * w[w.size() - i];
        w.push_back(next);
        double z = next + drift;
        if (d == 1) {
            level += z;
            path.push_back(level);
        } else {
            path.push_back(z);
        }
    }
    return path;
}

}  // namespace

ForecastSurface bootstrap_intervals(const FdmModel& model, const TsSpec& spec, int horizon, double level,
                                    int replicates, std::uint64_t seed) {
    if (replicates < 100) throw NumericError("bootstrap needs at least 100 replicates");
    if (!(level > 0.0 && level < 100.0)) throw NumericError("interval level must lie in (0, 100)");
    ForecastSurface fc = forecast_fdm(model, spec, horizon, level);

    const Eigen::Index n_ages = model.mu.size();
    const Eigen::Index n_years = model.model_residuals.cols();
    std::vector<TsFit> fits;
    for (int k = 0; k < model.num_components; ++k) fits.push_back(fit_series(column(model.beta, k), spec));
    const Eigen::VectorXd sd_obs = model.sigma2.cwiseMax(0.0).cwiseSqrt();
    const Eigen::VectorXd sd_mu = model.sigma2_mu.cwiseMax(0.0).cwiseSqrt();

    // samples(x + h * n_ages, b)
    Eigen::MatrixXd samples(n_ages * horizon, replicates);
    for (int b = 0; b < replicates; ++b) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(b)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_int_distribution<Eigen::Index> pick_year(0, n_years - 1);

        Eigen::MatrixXd paths(model.num_components, horizon);
        for (int k = 0; k < model.num_components; ++k) {
            auto path = simulate_path(fits[k], horizon, rng);
            for (int h = 0; h < horizon; ++h) paths(k, h) = path[h];
        }
        for (int h = 0; h < horizon; ++h) {
            Eigen::VectorXd y = model.mu + model.phi * paths.col(h);
            y += model.model_residuals.col(pick_year(rng));
            for (Eigen::Index x = 0; x < n_ages; ++x) {
                y(x) += sd_obs(x) * normal(rng) + sd_mu(x) * normal(rng);
            }
            samples.block(h * n_ages, b, n_ages, 1) = y;
        }
    }

    const double alpha = 1.0 - level / 100.0;
    fc.lower.resize(n_ages, horizon);
    fc.upper.resize(n_ages, horizon);
    std::vector<double> row(replicates);
    for (int h = 0; h < horizon; ++h) {
        for (Eigen::Index x = 0; x < n_ages; ++x) {
            for (int b = 0; b < replicates; ++b) row[b] = samples(h * n_ages + x, b);
            std::sort(row.begin(), row.end());
            fc.lower(x, h) = empirical_quantile(row, alpha / 2.0);
            fc.upper(x, h) = empirical_quantile(row, 1.0 - alpha / 2.0);
            // The analytic point forecast is kept; the empirical band must still bracket it.
            fc.lower(x, h) = std::min(fc.lower(x, h), fc.point(x, h));
            fc.upper(x, h) = std::max(fc.upper(x, h), fc.point(x, h));
        }
    }
    return fc;
}

}  // namespace mortality
