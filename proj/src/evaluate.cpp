#include "mortality/evaluate.hpp"

#include "mortality/error.hpp"
#include "mortality/numerics.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mortality {

namespace {

MetricRow mean_row(const std::vector<MetricRow>& rows) {
    MetricRow out;
    for (const auto& r : rows) {
        out.me += r.me;
        out.mse += r.mse;
        out.mpe += r.mpe;
        out.mape += r.mape;
    }
    const double n = static_cast<double>(rows.size());
    out.me /= n;
    out.mse /= n;
    out.mpe /= n;
    out.mape /= n;
    return out;
}

// Horner evaluation of c[0] + c[1] x + ... + c[n-1] x^(n-1).
double poly(std::span<const double> c, double x) {
    double r = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
    return r;
}

}  // namespace

ErrorReport error_metrics(const Eigen::MatrixXd& observed_log, const Eigen::MatrixXd& fitted_log) {
    if (observed_log.rows() != fitted_log.rows() || observed_log.cols() != fitted_log.cols()) {
        throw NumericError("error metrics: observed and fitted dimensions differ");
    }
    const Eigen::Index na = observed_log.rows();
    const Eigen::Index ny = observed_log.cols();
    if (na == 0 || ny == 0) throw NumericError("error metrics: empty surface");

    ErrorReport rep;
    rep.by_age.assign(na, {});
    rep.by_year.assign(ny, {});
    std::vector<int> pct_age(na, 0), pct_year(ny, 0);
    for (Eigen::Index t = 0; t < ny; ++t) {
        for (Eigen::Index x = 0; x < na; ++x) {
            const double obs = observed_log(x, t);
            const double e = obs - fitted_log(x, t);
            rep.by_age[x].me += e;
            rep.by_age[x].mse += e * e;
            rep.by_year[t].me += e;
            rep.by_year[t].mse += e * e;
            if (obs == 0.0) {
                ++rep.excluded_cells;
                continue;
            }
            const double pe = e / obs;
            rep.by_age[x].mpe += pe;
            rep.by_age[x].mape += std::abs(pe);
            rep.by_year[t].mpe += pe;
            rep.by_year[t].mape += std::abs(pe);
            ++pct_age[x];
            ++pct_year[t];
        }
    }
    auto finish = [](MetricRow& r, double n, int n_pct) {
        r.me /= n;
        r.mse /= n;
        r.mpe = n_pct > 0 ? r.mpe / n_pct : 0.0;
        r.mape = n_pct > 0 ? r.mape / n_pct : 0.0;
    };
    for (Eigen::Index x = 0; x < na; ++x) finish(rep.by_age[x], static_cast<double>(ny), pct_age[x]);
    for (Eigen::Index t = 0; t < ny; ++t) finish(rep.by_year[t], static_cast<double>(na), pct_year[t]);
    rep.avg_across_ages = mean_row(rep.by_age);
    rep.avg_across_years = mean_row(rep.by_year);
    return rep;
}

ErrorReport error_metrics(const MortalitySurface& observed, const Eigen::MatrixXd& fitted_log) {
    return error_metrics(observed.log_rates(), fitted_log);
}

TestResult t_test_zero_mean(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw NumericError("t-test needs at least 2 observations");
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TestResult r;
    r.n = static_cast<int>(n);
    if (!(sd > 0.0)) {
        if (mean == 0.0) {
            r.statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.statistic = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.p_value = 0.0;
        }
        return r;
    }
    r.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double dof = static_cast<double>(n - 1);
    // Two-sided tail: P(|T| > t) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2).
    const double xb = dof / (dof + r.statistic * r.statistic);
    r.p_value = boost::math::ibeta(0.5 * dof, 0.5, xb);
    return r;
}

TestResult normality_test(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) throw NumericError("Shapiro-Wilk test needs 3 <= n <= 5000, got " + std::to_string(n));
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    if (!(range > 1e-19 * std::max(1.0, std::abs(x.front())))) {
        throw NumericError("Shapiro-Wilk test: all observations are identical");
    }

    static constexpr double g[] = {-2.273, 0.459};
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        std::vector<double> m(half);
        double summ2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, rsn) - m[0] / ssumm2;
        std::size_t first_scaled;
        double fac;
        if (n > 5) {
            first_scaled = 2;
            const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            first_scaled = 1;
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first_scaled; i < half; ++i) a[i] = -m[i] / fac;
    }

    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / an;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    double num = 0.0;
    for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
    const double w = std::min(1.0, num * num / ss);

    TestResult r;
    r.n = static_cast<int>(n);
    r.statistic = w;
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274;
        constexpr double stqr = 1.04719755119660;
        r.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
        return r;
    }
    double y = std::log(1.0 - w);
    double mu, sigma;
    if (n <= 11) {
        const double gamma = poly(g, an);
        if (y >= gamma) {
            r.p_value = 1e-99;
            return r;
        }
        y = -std::log(gamma - y);
        mu = poly(c3, an);
        sigma = std::exp(poly(c4, an));
    } else {
        const double ln_n = std::log(an);
        mu = poly(c5, ln_n);
        sigma = std::exp(poly(c6, ln_n));
    }
    r.p_value = 0.5 * std::erfc((y - mu) / sigma / std::sqrt(2.0));
    return r;
}

std::vector<double> strided_subsample(std::span<const double> values, std::size_t max_n) {
    if (values.size() <= max_n) return {values.begin(), values.end()};
    std::vector<double> out;
    out.reserve(max_n);
    for (std::size_t i = 0; i < max_n; ++i) out.push_back(values[i * values.size() / max_n]);
    return out;
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::lc: return "lc";
        case ModelKind::lcs: return "lcs";
        case ModelKind::fdm: return "fdm";
    }
    return "lc";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "lc") return ModelKind::lc;
    if (text == "lcs") return ModelKind::lcs;
    if (text == "fdm") return ModelKind::fdm;
    throw DataError("unknown model '" + std::string(text) + "' (expected lc, lcs or fdm)");
}

ModelFit fit_model(const MortalitySurface& surface, ModelKind kind, const ModelSettings& settings) {
    ModelFit fit;
    fit.kind = kind;
    const Eigen::MatrixXd logm = surface.log_rates();
    switch (kind) {
        case ModelKind::lc:
        case ModelKind::lcs: {
            fit.lc = kind == ModelKind::lc ? fit_lc(surface) : fit_lcs(surface, settings.smooth);
            fit.fitted_log = fit.lc->fitted_log_rates();
            fit.explained = {fit.lc->explained_variance};
            break;
        }
        case ModelKind::fdm: {
            fit.fdm = fit_fdm(surface, settings.smooth, settings.num_components);
            fit.fitted_log = fit.fdm->fitted_log_rates();
            fit.explained = fit.fdm->explained_shares;
            break;
        }
    }
    fit.residuals = logm - fit.fitted_log;
    fit.errors = error_metrics(logm, fit.fitted_log);

    const Eigen::MatrixXd z = standardized_residuals(fit.residuals);
    std::span<const double> flat(z.data(), static_cast<std::size_t>(z.size()));
    fit.t_test = t_test_zero_mean(flat);
    auto sub = strided_subsample(flat, 5000);
    try {
        fit.normality = normality_test(sub);
    } catch (const NumericError&) {
        // Identical residuals (a perfect fit): normality is not testable.
        fit.normality = TestResult{1.0, 1.0, static_cast<int>(sub.size())};
    }
    return fit;
}

ForecastSurface forecast_model(const ModelFit& fit, int horizon, const ModelSettings& settings) {
    if (fit.lc) return forecast_lc(*fit.lc, settings.ts, horizon, settings.level);
    if (settings.bootstrap_replicates) {
        return bootstrap_intervals(*fit.fdm, settings.ts, horizon, settings.level, *settings.bootstrap_replicates,
                                   settings.seed);
    }
    return forecast_fdm(*fit.fdm, settings.ts, horizon, settings.level);
}

const ModelBacktest& BacktestReport::model(ModelKind kind) const {
    for (const auto& m : models) {
        if (m.kind == kind) return m;
    }
    throw NumericError("backtest report has no results for model " + std::string(to_string(kind)));
}

BacktestReport run_backtest(const MortalitySurface& surface, const std::vector<ModelKind>& models, Window train,
                            Window test, const ModelSettings& settings, QMethod q_method) {
    if (!(train.last < test.first)) throw DataError("backtest test window must start after the train window");
    if (!surface.years().contains(train) || !surface.years().contains(test)) {
        throw DataError("backtest windows must lie within the surface years");
    }
    if (models.empty()) throw DataError("backtest needs at least one model");

    const MortalitySurface train_surface = slice_window(surface, train);
    const MortalitySurface test_surface = slice_window(surface, test);
    const Eigen::MatrixXd observed = test_surface.log_rates();
    const int horizon = test.last - train.last;
    const int offset = test.first - train.last - 1;
    const bool with_e0 = surface.ages().first == 0;

    std::vector<double> observed_e0;
    if (with_e0) {
        for (Eigen::Index t = 0; t < observed.cols(); ++t) {
            const Eigen::VectorXd m = test_surface.rates().col(t);
            observed_e0.push_back(life_expectancy({m.data(), static_cast<std::size_t>(m.size())}, q_method));
        }
    }

    BacktestReport rep;
    rep.train = train;
    rep.test = test;
    for (ModelKind kind : models) {
        ModelFit fit = fit_model(train_surface, kind, settings);
        ForecastSurface full = forecast_model(fit, horizon, settings);

        ModelBacktest mb;
        mb.kind = kind;
        mb.forecast = full;
        mb.forecast.years = test;
        mb.forecast.point = full.point.middleCols(offset, test.size());
        mb.forecast.variance = full.variance.middleCols(offset, test.size());
        mb.forecast.lower = full.lower.middleCols(offset, test.size());
        mb.forecast.upper = full.upper.middleCols(offset, test.size());

        mb.errors = observed - mb.forecast.point;
        mb.mean_error_by_age = mb.errors.rowwise().mean();
        const double nt = static_cast<double>(mb.errors.cols());
        mb.sd_error_by_age = Eigen::VectorXd::Zero(mb.errors.rows());
        if (nt > 1) {
            mb.sd_error_by_age =
                ((mb.errors.colwise() - mb.mean_error_by_age).array().square().rowwise().sum() / (nt - 1.0)).sqrt();
        }

        if (with_e0) {
            mb.observed_e0 = observed_e0;
            mb.e0_intervals = e0_path(mb.forecast, q_method);
            for (std::size_t t = 0; t < mb.e0_intervals.size(); ++t) {
                mb.forecast_e0.push_back(mb.e0_intervals[t].point);
                mb.e0_errors.push_back(mb.e0_intervals[t].point - observed_e0[t]);
            }
            const double n = static_cast<double>(mb.e0_errors.size());
            mb.e0_error_mean = std::accumulate(mb.e0_errors.begin(), mb.e0_errors.end(), 0.0) / n;
            double ss = 0.0;
            for (double e : mb.e0_errors) ss += (e - mb.e0_error_mean) * (e - mb.e0_error_mean);
            mb.e0_error_variance = n > 1 ? ss / (n - 1.0) : 0.0;
        }
        rep.models.push_back(std::move(mb));
    }
    return rep;
}

}  // namespace mortality
