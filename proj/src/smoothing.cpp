#include "mortality/smoothing.hpp"

#include "mortality/error.hpp"
#include "mortality/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mortality {

namespace {

struct SmoothingProblem {
    Eigen::MatrixXd design;
    Eigen::VectorXd weights;
};

SmoothingProblem setup(std::span<const int> ages, Eigen::Index n_obs, const SmoothConfig& config) {
    if (ages.size() != static_cast<std::size_t>(n_obs)) {
        throw NumericError("smoothing: ages and values differ in length");
    }
    if (n_obs < 2) throw NumericError("smoothing: need at least two ages");
    const int nb = config.basis_size(static_cast<int>(n_obs));
    if (nb < config.difference_order + 1) {
        throw NumericError("smoothing: num_basis must be at least difference_order + 1");
    }
    if (n_obs < nb) throw NumericError("smoothing: fewer ages than basis functions");
    std::vector<double> xs(ages.begin(), ages.end());
    auto basis = BsplineBasis::uniform(xs.front(), xs.back(), nb, 3);

    SmoothingProblem prob;
    prob.design = bspline_design(basis, xs);
    if (config.weights.empty()) {
        prob.weights = Eigen::VectorXd::Ones(n_obs);
    } else {
        if (config.weights.size() != static_cast<std::size_t>(n_obs)) {
            throw NumericError("smoothing: weights must have one entry per age");
        }
        prob.weights = Eigen::Map<const Eigen::VectorXd>(config.weights.data(), n_obs);
    }
    return prob;
}

double gcv_score(const SmoothingProblem& prob, const Eigen::VectorXd& ys, double lambda, int order) {
    PenalizedFit fit = penalized_fit(prob.design, ys, prob.weights, lambda, order);
    const double n = static_cast<double>(ys.size());
    double rss = (prob.weights.array() * (ys - fit.fitted).array().square()).sum();
    double denom = n - fit.effective_dof;
    if (!(denom > 1e-8)) return std::numeric_limits<double>::infinity();
    return n * rss / (denom * denom);
}

double choose_lambda_impl(const SmoothingProblem& prob, const Eigen::VectorXd& ys, const SmoothConfig& config) {
    const auto grid = config.lambda_grid.values();
    double best = grid.back();
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        double score;
        try {
            score = gcv_score(prob, ys, lambda, config.difference_order);
        } catch (const NumericError&) {
            continue;
        }
        // Ties resolve to the smoother candidate.
        if (score <= best_score * (1.0 + 1e-12)) {
            best_score = score;
            best = lambda;
        }
    }
    return best;
}

}  // namespace

std::vector<double> LambdaGrid::values() const {
    if (count < 1 || !(min > 0.0) || !(max >= min)) {
        throw NumericError("lambda grid needs count >= 1 and 0 < min <= max");
    }
    if (count == 1) return {min};
    std::vector<double> out(count);
    const double lo = std::log10(min), hi = std::log10(max);
    for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, lo + (hi - lo) * i / (count - 1));
    return out;
}

int SmoothConfig::basis_size(int n_ages) const {
    if (num_basis) return *num_basis;
    int nb = std::min(static_cast<int>(std::floor(n_ages / 2.5)), 35);
    // A cubic basis needs at least four functions, and never more than there are ages.
    return std::min(std::max(nb, std::max(4, difference_order + 1)), n_ages);
}

Eigen::VectorXd enforce_monotone(const Eigen::VectorXd& values, Eigen::Index from_index) {
    Eigen::VectorXd out = values;
    if (from_index < 0 || from_index >= values.size()) return out;

    struct Block {
        double sum;
        Eigen::Index count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    for (Eigen::Index i = from_index; i < values.size(); ++i) {
        blocks.push_back({values(i), 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    Eigen::Index i = from_index;
    for (const auto& b : blocks) {
        double m = b.mean();
        for (Eigen::Index k = 0; k < b.count; ++k) out(i++) = m;
    }
    return out;
}

double choose_lambda(std::span<const int> ages, const Eigen::VectorXd& ys, const SmoothConfig& config) {
    auto prob = setup(ages, ys.size(), config);
    return choose_lambda_impl(prob, ys, config);
}

CurveFit smooth_curve(std::span<const int> ages, const Eigen::VectorXd& ys, const SmoothConfig& config) {
    if (!ys.allFinite()) throw NumericError("smoothing: log rates must be finite");
    auto prob = setup(ages, ys.size(), config);
    CurveFit out;
    out.lambda = config.lambda ? *config.lambda : choose_lambda_impl(prob, ys, config);
    out.values = penalized_fit(prob.design, ys, prob.weights, out.lambda, config.difference_order).fitted;
    if (config.monotone_from) {
        const int c = *config.monotone_from;
        if (c < ages.front() || c > ages.back()) {
            throw NumericError("smoothing: monotone_from age " + std::to_string(c) + " outside age range");
        }
        auto it = std::lower_bound(ages.begin(), ages.end(), c);
        out.values = enforce_monotone(out.values, it - ages.begin());
    }
    return out;
}

SmoothSurface smooth_surface(const MortalitySurface& surface, const SmoothConfig& config) {
    const auto ages = surface.age_list();
    const Eigen::MatrixXd logm = surface.log_rates();

    SmoothSurface out;
    out.ages = surface.ages();
    out.years = surface.years();
    out.values.resize(logm.rows(), logm.cols());
    out.lambdas.resize(logm.cols());
    for (Eigen::Index t = 0; t < logm.cols(); ++t) {
        CurveFit fit = smooth_curve(ages, logm.col(t), config);
        out.values.col(t) = fit.values;
        out.lambdas[t] = fit.lambda;
    }

    const Eigen::MatrixXd resid = logm - out.values;
    const Eigen::Index n = resid.cols();
    out.sigma2 = Eigen::VectorXd::Zero(resid.rows());
    if (n > 1) {
        Eigen::VectorXd mean = resid.rowwise().mean();
        out.sigma2 = (resid.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(n - 1);
    }
    return out;
}

}  // namespace mortality
