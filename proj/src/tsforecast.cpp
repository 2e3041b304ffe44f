#include "mortality/tsforecast.hpp"

#include "mortality/error.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace mortality {

namespace {

int parse_small_int(std::string_view s, std::string_view what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("time-series spec: cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
    }
    return v;
}

double drift_variance_scale(const TsFit& fit, std::size_t m) {
    double phi_sum = std::accumulate(fit.ar_coeffs.begin(), fit.ar_coeffs.end(), 0.0);
    double denom = 1.0 - phi_sum;
    return 1.0 / (static_cast<double>(m) * denom * denom);
}

}  // namespace

TsSpec TsSpec::parse(std::string_view text) {
    if (text == "rwd") return rwd();
    if (text.substr(0, 3) != "ar:") {
        throw DataError("time-series spec must be 'rwd' or 'ar:p,d[,drift]', got '" + std::string(text) + "'");
    }
    std::string_view rest = text.substr(3);
    std::vector<std::string_view> parts;
    while (true) {
        auto comma = rest.find(',');
        parts.push_back(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    if (parts.size() < 2 || parts.size() > 3 || (parts.size() == 3 && parts[2] != "drift")) {
        throw DataError("time-series spec must be 'ar:p,d' or 'ar:p,d,drift', got '" + std::string(text) + "'");
    }
    int p = parse_small_int(parts[0], "AR order");
    int d = parse_small_int(parts[1], "differencing order");
    if (p < 0) throw DataError("time-series spec: AR order must be >= 0");
    if (d != 0 && d != 1) throw DataError("time-series spec: differencing order must be 0 or 1");
    return ar(p, d, parts.size() == 3);
}

std::string TsSpec::to_string() const {
    if (family == TsFamily::rwd) return "rwd";
    return "ar:" + std::to_string(p) + "," + std::to_string(d) + (include_drift ? ",drift" : "");
}

TsFit fit_rwd(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 3) throw NumericError("random walk with drift needs at least 3 observations");
    TsFit fit;
    fit.spec = TsSpec::rwd();
    fit.n = static_cast<int>(n);
    fit.history = series;
    std::vector<double> diffs(n - 1);
    for (std::size_t t = 1; t < n; ++t) diffs[t - 1] = series[t] - series[t - 1];
    fit.drift = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    double ss = 0.0;
    fit.residuals.resize(diffs.size());
    for (std::size_t t = 0; t < diffs.size(); ++t) {
        fit.residuals[t] = diffs[t] - fit.drift;
        ss += fit.residuals[t] * fit.residuals[t];
    }
    fit.innovation_variance = ss / static_cast<double>(n - 2);
    return fit;
}

TsForecast forecast_rwd(const TsFit& fit, int h) {
    if (h < 1) throw NumericError("forecast horizon must be >= 1");
    TsForecast out;
    const double last = fit.history.back();
    const double s2 = fit.innovation_variance;
    const double drift_term = fit.spec.drift_uncertainty ? s2 / static_cast<double>(fit.n - 1) : 0.0;
    for (int k = 1; k <= h; ++k) {
        out.point.push_back(last + k * fit.drift);
        out.variance.push_back(k * s2 + static_cast<double>(k) * k * drift_term);
    }
    return out;
}

TsFit fit_ar(const std::vector<double>& series, const TsSpec& spec) {
    if (spec.p < 0) throw NumericError("AR order must be >= 0");
    if (spec.d != 0 && spec.d != 1) throw NumericError("differencing order must be 0 or 1");
    const int n = static_cast<int>(series.size());
    if (n - spec.d < spec.p + 2) {
        throw NumericError("AR(" + std::to_string(spec.p) + ") with d=" + std::to_string(spec.d) +
                           " needs at least " + std::to_string(spec.p + 2 + spec.d) + " observations");
    }
    TsFit fit;
    fit.spec = spec;
    fit.spec.family = TsFamily::arima;
    fit.n = n;
    fit.history = series;

    std::vector<double> z;
    if (spec.d == 1) {
        for (int t = 1; t < n; ++t) z.push_back(series[t] - series[t - 1]);
    } else {
        z = series;
    }
    const int m = static_cast<int>(z.size());
    if (spec.include_drift) fit.drift = std::accumulate(z.begin(), z.end(), 0.0) / m;
    Eigen::VectorXd w(m);
    for (int t = 0; t < m; ++t) w(t) = z[t] - fit.drift;

    const int p = spec.p;
    const int rows = m - p;
    const int dof = rows - (spec.include_drift ? 1 : 0);
    if (p == 0) {
        fit.residuals.assign(w.data(), w.data() + m);
    } else {
        Eigen::MatrixXd x(rows, p);
        Eigen::VectorXd y(rows);
        for (int r = 0; r < rows; ++r) {
            y(r) = w(p + r);
            for (int i = 0; i < p; ++i) x(r, i) = w(p + r - 1 - i);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        qr.setThreshold(1e-12);
        if (qr.rank() < p) throw NumericError("AR lag regression is singular");
        Eigen::VectorXd phi = qr.solve(y);
        fit.ar_coeffs.assign(phi.data(), phi.data() + p);
        Eigen::VectorXd e = y - x * phi;
        fit.residuals.assign(e.data(), e.data() + rows);

        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
        companion.row(0) = phi.transpose();
        if (p > 1) companion.bottomLeftCorner(p - 1, p - 1).setIdentity();
        Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
        fit.explosive = (es.eigenvalues().array().abs() >= 1.0).any();
    }
    double ss = 0.0;
    for (double e : fit.residuals) ss += e * e;
    fit.innovation_variance = ss / static_cast<double>(dof);
    return fit;
}

TsForecast forecast_ar(const TsFit& fit, int h) {
    if (h < 1) throw NumericError("forecast horizon must be >= 1");
    const auto& spec = fit.spec;
    const int p = static_cast<int>(fit.ar_coeffs.size());
    const auto& x = fit.history;

    std::vector<double> w;
    if (spec.d == 1) {
        for (std::size_t t = 1; t < x.size(); ++t) w.push_back(x[t] - x[t - 1] - fit.drift);
    } else {
        for (double v : x) w.push_back(v - fit.drift);
    }
    const std::size_t m = w.size();

    std::vector<double> psi(h, 0.0);
    psi[0] = 1.0;
    for (int j = 1; j < h; ++j) {
        for (int i = 1; i <= std::min(j, p); ++i) psi[j] += fit.ar_coeffs[i - 1] * psi[j - i];
    }

    const double s2 = fit.innovation_variance;
    const bool drift_term = spec.include_drift && spec.drift_uncertainty;
    const double vm = drift_term ? s2 * drift_variance_scale(fit, m) : 0.0;

    TsForecast out;
    double level = x.back();
    double psi_cum = 0.0;
    double var_acc = 0.0;
    for (int k = 1; k <= h; ++k) {
        double next = 0.0;
        for (int i = 1; i <= p; ++i) next += fit.ar_coeffs[i - 1] * w[w.size() - i];
        w.push_back(next);
        double z = next + fit.drift;
        if (spec.d == 1) {
            level += z;
            psi_cum += psi[k - 1];
            var_acc += psi_cum * psi_cum;
            out.point.push_back(level);
            out.variance.push_back(s2 * var_acc + static_cast<double>(k) * k * vm);
        } else {
            var_acc += psi[k - 1] * psi[k - 1];
            out.point.push_back(z);
            out.variance.push_back(s2 * var_acc + vm);
        }
    }
    return out;
}

TsFit fit_series(const std::vector<double>& series, const TsSpec& spec) {
    if (spec.family == TsFamily::rwd) {
        TsFit fit = fit_rwd(series);
        fit.spec.drift_uncertainty = spec.drift_uncertainty;
        return fit;
    }
    return fit_ar(series, spec);
}

TsForecast forecast_series(const TsFit& fit, int h) {
    return fit.spec.family == TsFamily::rwd ? forecast_rwd(fit, h) : forecast_ar(fit, h);
}

}  // namespace mortality
