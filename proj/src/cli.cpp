#include "mortality/cli.hpp"

#include "mortality/error.hpp"
#include "mortality/svg_chart.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mortality::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

class OutputDir {
public:
    explicit OutputDir(const std::string& root) : root_(root) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw DataError("cannot create output directory '" + root + "': " + ec.message());
    }

    std::string path(const std::string& rel) const {
        fs::path p = root_ / rel;
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw DataError("cannot create directory '" + p.parent_path().string() + "'");
        return p.string();
    }

    void write(const std::string& rel, const std::string& content) const {
        std::string p = path(rel);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw DataError("cannot write '" + p + "'");
        out << content;
        if (!out) throw DataError("failed writing '" + p + "'");
    }

private:
    fs::path root_;
};

std::string fmt(double v) { return format_double(v); }

std::string vector_csv(const std::string& key, int first_label, const Eigen::VectorXd& values) {
    std::ostringstream o;
    o << key << ",value\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) o << first_label + i << ',' << fmt(values(i)) << '\n';
    return o.str();
}

std::string columns_csv(const std::string& key, int first_label, const std::string& prefix,
                        const Eigen::MatrixXd& m) {
    std::ostringstream o;
    o << key;
    for (Eigen::Index k = 0; k < m.cols(); ++k) o << ',' << prefix << k + 1;
    o << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        o << first_label + i;
        for (Eigen::Index k = 0; k < m.cols(); ++k) o << ',' << fmt(m(i, k));
        o << '\n';
    }
    return o.str();
}

std::string cell_csv(const std::string& value_name, Window ages, Window years, const Eigen::MatrixXd& m) {
    std::ostringstream o;
    o << "age,year," << value_name << '\n';
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
        for (Eigen::Index x = 0; x < m.rows(); ++x) {
            o << ages.first + x << ',' << years.first + t << ',' << fmt(m(x, t)) << '\n';
        }
    }
    return o.str();
}

std::string metric_rows_csv(const std::string& key, int first_label, const std::vector<MetricRow>& rows) {
    std::ostringstream o;
    o << key << ",me,mse,mpe,mape\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        o << first_label + static_cast<int>(i) << ',' << fmt(r.me) << ',' << fmt(r.mse) << ',' << fmt(r.mpe) << ','
          << fmt(r.mape) << '\n';
    }
    return o.str();
}

std::string error_table_csv(const ErrorReport& rep) {
    std::ostringstream o;
    o << "aggregation,me,mse,mpe,mape\n";
    for (auto [name, r] : {std::pair{"average_across_ages", rep.avg_across_ages},
                           std::pair{"average_across_years", rep.avg_across_years}}) {
        o << name << ',' << fmt(r.me) << ',' << fmt(r.mse) << ',' << fmt(r.mpe) << ',' << fmt(r.mape) << '\n';
    }
    return o.str();
}

json metric_json(const MetricRow& r) { return {{"me", r.me}, {"mse", r.mse}, {"mpe", r.mpe}, {"mape", r.mape}}; }

json test_json(const TestResult& t) { return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"n", t.n}}; }

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> axis(Window w) {
    std::vector<double> out;
    for (int v = w.first; v <= w.last; ++v) out.push_back(v);
    return out;
}

json base_summary(const RunConfig& config) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = config.command;
    j["gender"] = std::string(to_string(config.gender));
    j["ages"] = {config.ages.first, config.ages.last};
    j["scale"] = "log_rate";
    j["ts_spec"] = config.settings.ts.to_string();
    j["drift_uncertainty"] = config.settings.ts.drift_uncertainty;
    const auto& sm = config.settings.smooth;
    json smooth;
    smooth["num_basis"] = sm.num_basis ? json(*sm.num_basis) : json("auto");
    smooth["lambda"] = sm.lambda ? json(*sm.lambda) : json("gcv");
    smooth["difference_order"] = sm.difference_order;
    smooth["monotone_from"] = sm.monotone_from ? json(*sm.monotone_from) : json(nullptr);
    j["smoothing"] = smooth;
    j["num_components"] = config.settings.num_components;
    return j;
}

void write_summary(const RunConfig& config, const OutputDir& dir, const json& summary) {
    if (config.wants("json")) dir.write("summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Per-model fit artifacts
// ---------------------------------------------------------------------------

const char* table_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::lc: return "table1.csv";
        case ModelKind::fdm: return "table2.csv";
        case ModelKind::lcs: return "table_lcs.csv";
    }
    return "table.csv";
}

json write_fit_artifacts(const RunConfig& config, const OutputDir& dir, const MortalitySurface& surface,
                         const ModelFit& fit) {
    const std::string name(to_string(fit.kind));
    const Window ages = surface.ages();
    const Window years = surface.years();
    json j;
    j["errors"] = {{"average_across_ages", metric_json(fit.errors.avg_across_ages)},
                   {"average_across_years", metric_json(fit.errors.avg_across_years)},
                   {"excluded_cells", fit.errors.excluded_cells}};
    j["t_test"] = test_json(fit.t_test);
    j["normality"] = test_json(fit.normality);

    if (fit.lc) {
        const auto& m = *fit.lc;
        j["explained_variance"] = m.explained_variance;
        j["explained_variance_rss"] = m.explained_variance_rss;
        if (config.wants("csv")) {
            dir.write(name + "/alpha.csv", vector_csv("age", ages.first, m.alpha));
            dir.write(name + "/beta.csv", vector_csv("age", ages.first, m.beta));
            dir.write(name + "/kappa.csv", vector_csv("year", years.first, m.kappa));
        }
        if (config.wants("svg")) {
            write_line_chart({{"alpha", axis(ages), to_std(m.alpha)}}, {name + ": alpha_x", "age", "alpha"},
                             dir.path(name + "/alpha.svg"));
            write_line_chart({{"beta", axis(ages), to_std(m.beta)}}, {name + ": beta_x", "age", "beta"},
                             dir.path(name + "/beta.svg"));
            write_line_chart({{"kappa", axis(years), to_std(m.kappa)}}, {name + ": kappa_t", "year", "kappa"},
                             dir.path(name + "/kappa.svg"));
        }
    } else {
        const auto& m = *fit.fdm;
        j["explained_shares"] = m.explained_shares;
        if (config.wants("csv")) {
            dir.write(name + "/mu.csv", vector_csv("age", ages.first, m.mu));
            dir.write(name + "/phi.csv", columns_csv("age", ages.first, "phi", m.phi));
            dir.write(name + "/beta.csv", columns_csv("year", years.first, "beta", m.beta));
            Eigen::MatrixXd var(m.v.size(), 3);
            var << m.v, m.sigma2, m.sigma2_mu;
            std::ostringstream o;
            o << "age,v,sigma2,sigma2_mu\n";
            for (Eigen::Index i = 0; i < var.rows(); ++i) {
                o << ages.first + i << ',' << fmt(var(i, 0)) << ',' << fmt(var(i, 1)) << ',' << fmt(var(i, 2)) << '\n';
            }
            dir.write(name + "/variances.csv", o.str());
        }
        if (config.wants("svg")) {
            write_line_chart({{"mu", axis(ages), to_std(m.mu)}}, {"fdm: mu(x)", "age", "mu"},
                             dir.path(name + "/mu.svg"));
            std::vector<ChartSeries> phis, betas;
            for (int k = 0; k < m.num_components; ++k) {
                const std::string label = std::to_string(k + 1);
                phis.push_back({"phi" + label, axis(ages), to_std(m.phi.col(k))});
                betas.push_back({"beta" + label, axis(years), to_std(m.beta.col(k))});
            }
            write_line_chart(phis, {"fdm: basis functions", "age", "phi_k(x)"}, dir.path(name + "/phi.svg"));
            write_line_chart(betas, {"fdm: coefficients", "year", "beta_t,k"}, dir.path(name + "/beta.svg"));
        }
    }
    if (config.wants("csv")) {
        dir.write(name + "/residuals.csv", cell_csv("residual", ages, years, fit.residuals));
        dir.write(name + "/errors_by_age.csv", metric_rows_csv("age", ages.first, fit.errors.by_age));
        dir.write(name + "/errors_by_year.csv", metric_rows_csv("year", years.first, fit.errors.by_year));
        dir.write(table_name(fit.kind), error_table_csv(fit.errors));
    }
    return j;
}

void print_fit(std::ostream& out, const ModelFit& fit) {
    out << to_string(fit.kind) << ": explained ";
    for (std::size_t i = 0; i < fit.explained.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fit.explained[i]);
        out << (i ? " / " : "") << buf;
    }
    out << "; MSE (across ages) " << fmt(fit.errors.avg_across_ages.mse) << "; t-test p " << fit.t_test.p_value
        << "; normality p " << fit.normality.p_value << '\n';
}

json run_fits(const RunConfig& config, std::ostream& out, const OutputDir& dir,
              std::vector<std::pair<ModelKind, ModelFit>>& fits) {
    MortalitySurface surface = load_surface(config, config.years);
    json summary = base_summary(config);
    summary["years"] = {surface.years().first, surface.years().last};
    for (ModelKind kind : config.models) {
        ModelFit fit = fit_model(surface, kind, config.settings);
        summary["models"][std::string(to_string(kind))] = write_fit_artifacts(config, dir, surface, fit);
        print_fit(out, fit);
        fits.emplace_back(kind, std::move(fit));
    }
    summary["notes"] = {"errors are ln m minus fitted log rate",
                        "residuals standardized by their overall standard deviation",
                        "normality test uses an evenly strided subsample when more than 5000 residuals"};
    return summary;
}

// ---------------------------------------------------------------------------
// Forecast artifacts
// ---------------------------------------------------------------------------

std::string forecast_csv(const ForecastSurface& fc) {
    std::ostringstream o;
    o << "age,year,point,variance,lower,upper\n";
    for (int h = 0; h < fc.horizon(); ++h) {
        for (Eigen::Index x = 0; x < fc.point.rows(); ++x) {
            o << fc.ages.first + x << ',' << fc.years.first + h << ',' << fmt(fc.point(x, h)) << ','
              << fmt(fc.variance(x, h)) << ',' << fmt(fc.lower(x, h)) << ',' << fmt(fc.upper(x, h)) << '\n';
        }
    }
    return o.str();
}

std::string e0_csv(const std::vector<E0Point>& path) {
    std::ostringstream o;
    o << "year,e0,lower,upper\n";
    for (const auto& e : path) o << e.year << ',' << fmt(e.point) << ',' << fmt(e.lower) << ',' << fmt(e.upper) << '\n';
    return o.str();
}

ChartSeries e0_series(const std::string& label, const std::vector<E0Point>& path) {
    ChartSeries s;
    s.label = label;
    std::vector<double> lo, hi;
    for (const auto& e : path) {
        s.xs.push_back(e.year);
        s.ys.push_back(e.point);
        lo.push_back(e.lower);
        hi.push_back(e.upper);
    }
    s.band_lower = lo;
    s.band_upper = hi;
    return s;
}

std::string interval_method(const RunConfig& config, ModelKind kind) {
    return kind == ModelKind::fdm && config.settings.bootstrap_replicates ? "bootstrap" : "normal";
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration helpers
// ---------------------------------------------------------------------------

Window parse_window(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("window '" + text + "' must have the form A:B");
    try {
        std::size_t p1 = 0, p2 = 0;
        std::string a = text.substr(0, colon), b = text.substr(colon + 1);
        Window w{std::stoi(a, &p1), std::stoi(b, &p2)};
        if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("trailing characters");
        if (w.last < w.first) throw UsageError("window '" + text + "' ends before it starts");
        return w;
    } catch (const std::logic_error&) {
        throw UsageError("window '" + text + "' must have the form A:B with integers");
    }
}

std::string resolve_data_path(const std::string& flag_value) {
    std::string base = flag_value;
    if (base.empty()) {
        const char* env = std::getenv(kDataDirEnv);
        if (!env || !*env) {
            throw UsageError(std::string("no data file given; pass --data or set ") + kDataDirEnv);
        }
        base = env;
    }
    std::error_code ec;
    if (fs::is_directory(base, ec)) {
        for (const char* name : {"Mx_1x1.txt", "ITA.Mx_1x1.txt"}) {
            fs::path p = fs::path(base) / name;
            if (fs::exists(p, ec)) return p.string();
        }
        throw DataError("data directory '" + base + "' contains no Mx_1x1.txt");
    }
    if (!fs::exists(base, ec)) throw DataError("data file '" + base + "' does not exist");
    return base;
}

MortalitySurface load_surface(const RunConfig& config, std::optional<Window> years) {
    const std::string path = resolve_data_path(config.data_path);
    auto records = read_hmd_file(path);
    if (!years) {
        Window all{records.front().year, records.front().year};
        for (const auto& r : records) {
            all.first = std::min(all.first, r.year);
            all.last = std::max(all.last, r.year);
        }
        years = all;
    }
    return build_surface(records, config.gender, config.ages, *years);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_fit(const RunConfig& config, std::ostream& out) {
    OutputDir dir(config.output);
    std::vector<std::pair<ModelKind, ModelFit>> fits;
    json summary = run_fits(config, out, dir, fits);
    write_summary(config, dir, summary);
    return kSuccess;
}

int cmd_compare(const RunConfig& config_in, std::ostream& out) {
    RunConfig config = config_in;
    config.models = {ModelKind::lc, ModelKind::lcs, ModelKind::fdm};
    OutputDir dir(config.output);
    std::vector<std::pair<ModelKind, ModelFit>> fits;
    json summary = run_fits(config, out, dir, fits);
    const auto& lc = fits[0].second;
    const auto& lcs = fits[1].second;
    const auto& fdm = fits[2].second;
    summary["comparison"] = {
        {"fdm_mse_below_lc", fdm.errors.avg_across_ages.mse < lc.errors.avg_across_ages.mse},
        {"fdm_mse_below_lcs", fdm.errors.avg_across_ages.mse < lcs.errors.avg_across_ages.mse},
        {"fdm_mse_below_lc_across_years", fdm.errors.avg_across_years.mse < lc.errors.avg_across_years.mse},
        {"lcs_explained_above_lc", lcs.explained[0] > lc.explained[0]},
    };
    if (config.wants("csv")) {
        std::ostringstream o;
        o << "model,explained,mse_across_ages,mse_across_years\n";
        for (const auto& [kind, f] : fits) {
            o << to_string(kind) << ',' << fmt(f.explained[0]) << ',' << fmt(f.errors.avg_across_ages.mse) << ','
              << fmt(f.errors.avg_across_years.mse) << '\n';
        }
        dir.write("comparison.csv", o.str());
    }
    write_summary(config, dir, summary);
    return kSuccess;
}

int cmd_forecast(const RunConfig& config, std::ostream& out) {
    OutputDir dir(config.output);
    MortalitySurface surface = load_surface(config, config.years);
    json summary = base_summary(config);
    summary["years"] = {surface.years().first, surface.years().last};
    summary["horizon"] = config.horizon;
    summary["level"] = config.settings.level;
    const bool with_e0 = surface.ages().first == 0;
    if (with_e0) summary["e0_interval_note"] = "pointwise envelope of the mortality interval, not a joint interval";

    std::vector<ChartSeries> e0_chart;
    for (ModelKind kind : config.models) {
        const std::string name(to_string(kind));
        ModelFit fit = fit_model(surface, kind, config.settings);
        ForecastSurface fc = forecast_model(fit, config.horizon, config.settings);
        json j;
        j["interval_method"] = interval_method(config, kind);
        if (config.wants("csv")) dir.write(name + "/forecast.csv", forecast_csv(fc));
        if (with_e0) {
            auto path = e0_path(fc, config.q_method);
            json e0 = json::array();
            for (const auto& e : path) e0.push_back({{"year", e.year}, {"e0", e.point}, {"lower", e.lower}, {"upper", e.upper}});
            j["e0"] = e0;
            if (config.wants("csv")) dir.write(name + "/e0_forecast.csv", e0_csv(path));
            e0_chart.push_back(e0_series(name, path));
            out << name << ": e0 " << path.back().year << " = " << path.back().point << " [" << path.back().lower
                << ", " << path.back().upper << "]\n";
        }
        summary["models"][name] = j;
    }
    if (config.wants("svg") && !e0_chart.empty()) {
        write_line_chart(e0_chart, {"Forecast life expectancy at birth", "year", "e0"}, dir.path("e0_forecast.svg"));
    }
    write_summary(config, dir, summary);
    return kSuccess;
}

int cmd_backtest(const RunConfig& config, std::ostream& out) {
    OutputDir dir(config.output);
    MortalitySurface surface = load_surface(config, Window{config.train.first, config.test.last});
    BacktestReport rep = run_backtest(surface, config.models, config.train, config.test, config.settings, config.q_method);

    json summary = base_summary(config);
    summary["train"] = {config.train.first, config.train.last};
    summary["test"] = {config.test.first, config.test.last};
    summary["level"] = config.settings.level;
    summary["error_convention"] = "log-rate error = observed - forecast; e0 error = forecast - observed";
    const Window ages = surface.ages();
    const bool with_e0 = ages.first == 0;
    if (with_e0) summary["e0_interval_note"] = "pointwise envelope of the mortality interval, not a joint interval";

    const char* fig_for[] = {"fig9", "fig10", "fig11"};
    std::vector<ChartSeries> mean_chart, sd_chart, e0_chart;
    if (with_e0) {
        const auto& any = rep.models.front();
        e0_chart.push_back({"observed", axis(config.test), any.observed_e0});
    }
    for (const auto& mb : rep.models) {
        const std::string name(to_string(mb.kind));
        const std::string fig = fig_for[static_cast<int>(mb.kind)];
        if (config.wants("csv")) {
            dir.write(fig + "_" + name + "_forecast_errors.csv", cell_csv("error", ages, config.test, mb.errors));
            dir.write(name + "/forecast.csv", forecast_csv(mb.forecast));
        }
        if (config.wants("svg")) {
            std::vector<ChartSeries> curves;
            for (int t = 0; t < config.test.size(); ++t) {
                if (t % 5 != 0 && t != config.test.size() - 1) continue;
                curves.push_back({std::to_string(config.test.first + t), axis(ages), to_std(mb.errors.col(t))});
            }
            write_line_chart(curves, {name + ": forecast errors by age", "age", "observed - forecast ln m"},
                             dir.path(fig + ".svg"));
        }
        mean_chart.push_back({name, axis(ages), to_std(mb.mean_error_by_age)});
        sd_chart.push_back({name, axis(ages), to_std(mb.sd_error_by_age)});

        json j;
        j["interval_method"] = interval_method(config, mb.kind);
        j["mean_error"] = mb.errors.mean();
        j["mean_squared_error"] = mb.errors.squaredNorm() / static_cast<double>(mb.errors.size());
        if (with_e0) {
            j["e0_error_mean"] = mb.e0_error_mean;
            j["e0_error_variance"] = mb.e0_error_variance;
            j["e0_errors"] = mb.e0_errors;
            e0_chart.push_back(e0_series(name, mb.e0_intervals));
            out << name << ": e0 error mean " << mb.e0_error_mean << ", variance " << mb.e0_error_variance << '\n';
        }
        summary["models"][name] = j;
    }

    auto by_age_csv = [&](auto member) {
        std::ostringstream o;
        o << "age";
        for (const auto& mb : rep.models) o << ',' << to_string(mb.kind);
        o << '\n';
        for (int x = 0; x < ages.size(); ++x) {
            o << ages.first + x;
            for (const auto& mb : rep.models) o << ',' << fmt((mb.*member)(x));
            o << '\n';
        }
        return o.str();
    };
    if (config.wants("csv")) {
        dir.write("fig12_mean_error_by_age.csv", by_age_csv(&ModelBacktest::mean_error_by_age));
        dir.write("fig13_sd_error_by_age.csv", by_age_csv(&ModelBacktest::sd_error_by_age));
        if (with_e0) {
            std::ostringstream t;
            t << "model,mean,variance\n";
            for (const auto& mb : rep.models) {
                t << to_string(mb.kind) << ',' << fmt(mb.e0_error_mean) << ',' << fmt(mb.e0_error_variance) << '\n';
            }
            dir.write("table3_4_e0_errors.csv", t.str());
            std::ostringstream e;
            e << "model,year,observed,forecast,lower,upper\n";
            for (const auto& mb : rep.models) {
                for (std::size_t k = 0; k < mb.e0_intervals.size(); ++k) {
                    const auto& p = mb.e0_intervals[k];
                    e << to_string(mb.kind) << ',' << p.year << ',' << fmt(mb.observed_e0[k]) << ',' << fmt(p.point)
                      << ',' << fmt(p.lower) << ',' << fmt(p.upper) << '\n';
                }
            }
            dir.write("fig14_15_e0_intervals.csv", e.str());
        }
    }
    if (config.wants("svg")) {
        write_line_chart(mean_chart, {"Mean forecast error by age", "age", "mean error"}, dir.path("fig12.svg"));
        write_line_chart(sd_chart, {"Standard deviation of forecast error by age", "age", "sd of error"},
                         dir.path("fig13.svg"));
        if (with_e0) {
            write_line_chart(e0_chart, {"Life expectancy at birth: forecast intervals", "year", "e0"},
                             dir.path("fig14_15.svg"));
        }
    }
    write_summary(config, dir, summary);
    return kSuccess;
}

int cmd_lifetable(const RunConfig& config, std::ostream& out) {
    if (config.ages.first != 0) throw UsageError("lifetable needs the age window to start at 0");
    OutputDir dir(config.output);
    MortalitySurface surface = load_surface(config, config.years);
    const int year = config.table_year.value_or(surface.years().last);
    if (!surface.years().contains(year)) throw UsageError("--year " + std::to_string(year) + " outside the data window");

    auto column = [&](int y) {
        Eigen::VectorXd m = surface.rates().col(y - surface.years().first);
        return std::vector<double>(m.data(), m.data() + m.size());
    };
    LifeTable table = rates_to_lifetable(column(year), config.q_method);
    std::vector<double> e0s;
    for (int y = surface.years().first; y <= surface.years().last; ++y) e0s.push_back(life_expectancy(column(y), config.q_method));

    if (config.wants("csv")) {
        std::ostringstream lt;
        write_lifetable_csv(lt, table);
        dir.write("lifetable.csv", lt.str());
        std::ostringstream e;
        e << "year,e0\n";
        for (std::size_t i = 0; i < e0s.size(); ++i) e << surface.years().first + static_cast<int>(i) << ',' << fmt(e0s[i]) << '\n';
        dir.write("e0_by_year.csv", e.str());
    }
    if (config.wants("svg")) {
        write_line_chart({{"e0", axis(surface.years()), e0s}}, {"Period life expectancy at birth", "year", "e0"},
                         dir.path("e0_by_year.svg"));
    }
    json summary = base_summary(config);
    summary["years"] = {surface.years().first, surface.years().last};
    summary["year"] = year;
    summary["e0"] = table.e0;
    summary["q_method"] = config.q_method == QMethod::constant_hazard ? "constant-hazard" : "actuarial";
    write_summary(config, dir, summary);
    out << "e0 (" << year << ", " << to_string(config.gender) << ") = " << table.e0 << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

namespace {

struct RawOptions {
    std::string data;
    std::string gender = "male";
    std::string ages = "0:100";
    std::string years;
    std::string train = "1950:1975";
    std::string test = "1976:2005";
    std::string models;
    int horizon = 30;
    int year = -1;
    int components = 4;
    int num_basis = 0;
    std::string lambda = "auto";
    int diff_order = 2;
    std::string monotone_from = "65";
    std::string ts = "rwd";
    bool no_drift_uncertainty = false;
    double level = 95.0;
    int bootstrap = 0;
    std::uint64_t seed = 1;
    std::string output = "out";
    std::string formats = "csv,json,svg";
    std::string q_method = "constant-hazard";
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void add_common(CLI::App* app, RawOptions& o) {
    app->add_option("--data", o.data, std::string("HMD Mx_1x1 file or directory (default: $") + kDataDirEnv + ")");
    app->add_option("--gender", o.gender, "female, male or total")->capture_default_str();
    app->add_option("--ages", o.ages, "age window A:B")->capture_default_str();
    app->add_option("--models,--model", o.models, "comma-separated subset of lc,lcs,fdm");
    app->add_option("-K,--components", o.components, "FDM basis functions")->capture_default_str();
    app->add_option("--num-basis", o.num_basis, "B-spline basis size (default min(n/2.5, 35))");
    app->add_option("--lambda", o.lambda, "penalty weight or 'auto' (GCV)")->capture_default_str();
    app->add_option("--diff-order", o.diff_order, "penalty difference order (1-3)")->capture_default_str();
    app->add_option("--monotone-from", o.monotone_from, "age from which curves are nondecreasing, or 'none'")
        ->capture_default_str();
    app->add_option("--ts", o.ts, "coefficient model: rwd or ar:p,d[,drift]")->capture_default_str();
    app->add_flag("--no-drift-uncertainty", o.no_drift_uncertainty, "omit drift estimation variance");
    app->add_option("--level", o.level, "interval level in percent")->capture_default_str();
    app->add_option("--bootstrap", o.bootstrap, "FDM bootstrap replicates (0 = analytic intervals)");
    app->add_option("--seed", o.seed, "bootstrap seed")->capture_default_str();
    app->add_option("-o,--output", o.output, "output directory")->capture_default_str();
    app->add_option("--formats", o.formats, "comma-separated subset of csv,json,svg")->capture_default_str();
    app->add_option("--q-method", o.q_method, "constant-hazard or actuarial")->capture_default_str();
}

RunConfig to_config(const std::string& command, const RawOptions& o) {
    RunConfig c;
    c.command = command;
    c.data_path = o.data;
    try {
        c.gender = parse_gender(o.gender);
        c.q_method = parse_q_method(o.q_method);
        c.settings.ts = TsSpec::parse(o.ts);
        if (!o.models.empty()) {
            c.models.clear();
            for (const auto& m : split_list(o.models)) c.models.push_back(parse_model_kind(m));
        } else if (command == "backtest" || command == "forecast") {
            c.models = {ModelKind::lc, ModelKind::lcs, ModelKind::fdm};
        }
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    c.settings.ts.drift_uncertainty = !o.no_drift_uncertainty;
    c.ages = parse_window(o.ages);
    if (!o.years.empty()) c.years = parse_window(o.years);
    c.train = parse_window(o.train);
    c.test = parse_window(o.test);
    if (command == "backtest" && c.test.first <= c.train.last) {
        throw UsageError("--test window must start after the --train window ends");
    }
    c.horizon = o.horizon;
    if (c.horizon < 1) throw UsageError("--horizon must be >= 1");
    if (o.year >= 0) c.table_year = o.year;
    if (!(o.level > 50.0 && o.level < 99.9)) throw UsageError("--level must lie in (50, 99.9)");
    c.settings.level = o.level;
    if (o.components < 1) throw UsageError("-K must be >= 1");
    c.settings.num_components = o.components;
    if (o.num_basis > 0) c.settings.smooth.num_basis = o.num_basis;
    if (o.lambda != "auto") {
        try {
            c.settings.smooth.lambda = std::stod(o.lambda);
        } catch (const std::logic_error&) {
            throw UsageError("--lambda must be a number or 'auto'");
        }
        if (!(*c.settings.smooth.lambda >= 0.0)) throw UsageError("--lambda must be >= 0");
    }
    if (o.diff_order < 1 || o.diff_order > 3) throw UsageError("--diff-order must be 1, 2 or 3");
    c.settings.smooth.difference_order = o.diff_order;
    if (o.monotone_from == "none") {
        c.settings.smooth.monotone_from.reset();
    } else {
        try {
            c.settings.smooth.monotone_from = std::stoi(o.monotone_from);
        } catch (const std::logic_error&) {
            throw UsageError("--monotone-from must be an age or 'none'");
        }
    }
    if (o.bootstrap != 0) {
        if (o.bootstrap < 100) throw UsageError("--bootstrap needs at least 100 replicates");
        c.settings.bootstrap_replicates = o.bootstrap;
    }
    c.settings.seed = o.seed;
    c.output = o.output;
    c.formats.clear();
    for (const auto& f : split_list(o.formats)) {
        if (f != "csv" && f != "json" && f != "svg") throw UsageError("unknown format '" + f + "'");
        c.formats.insert(f);
    }
    return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fit, forecast and backtest Lee-Carter, smoothed Lee-Carter and functional demographic models"};
    app.name("mortality");
    app.require_subcommand(1);
    RawOptions o;

    auto* fit = app.add_subcommand("fit", "fit models and write parameters, fit diagnostics and error tables");
    add_common(fit, o);
    fit->add_option("--years", o.years, "fit window A:B (default: all years in the data)");

    auto* compare = app.add_subcommand("compare", "fit lc, lcs and fdm and compare in-sample errors");
    add_common(compare, o);
    compare->add_option("--years", o.years, "fit window A:B");

    auto* forecast = app.add_subcommand("forecast", "fit and forecast log rates and life expectancy");
    add_common(forecast, o);
    forecast->add_option("--years", o.years, "fit window A:B");
    forecast->add_option("--horizon", o.horizon, "forecast horizon in years")->capture_default_str();

    auto* backtest = app.add_subcommand("backtest", "fit on a train window and score forecasts on a test window");
    add_common(backtest, o);
    backtest->add_option("--train", o.train, "train window A:B")->capture_default_str();
    backtest->add_option("--test", o.test, "test window A:B")->capture_default_str();

    auto* lifetable = app.add_subcommand("lifetable", "period life tables and e0 from observed rates");
    add_common(lifetable, o);
    lifetable->add_option("--years", o.years, "window A:B");
    lifetable->add_option("--year", o.year, "year of the detailed table (default: last)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            const std::string name = sub->get_name();
            RunConfig config = to_config(name, o);
            if (name == "fit") return cmd_fit(config, out);
            if (name == "compare") return cmd_compare(config, out);
            if (name == "forecast") return cmd_forecast(config, out);
            if (name == "backtest") return cmd_backtest(config, out);
            if (name == "lifetable") return cmd_lifetable(config, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const NumericError& e) {
        err << "computation failed: " << e.what() << '\n';
        return kComputationError;
    } catch (const std::exception& e) {
        err << "computation failed: " << e.what() << '\n';
        return kComputationError;
    }
    return kUsageError;
}

}  // namespace mortality::cli
