#include "metacot/ordinal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace metacot {

namespace {

double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double density(double z) {
    const double f = logistic(z);
    return f * (1.0 - f);
}

// f'(z) = f(z) (1 - 2 F(z))
double density_slope(double z) { return density(z) * (1.0 - 2.0 * logistic(z)); }

// F(upper) - F(lower), evaluated on the side where it does not cancel.
double interval_prob(double upper, double lower) {
    if (lower > 0) return logistic(-lower) - logistic(-upper);
    return logistic(upper) - logistic(lower);
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFloor = 1e-300;

} // namespace

ProportionalOddsModel::ProportionalOddsModel(std::vector<int> outcomes, std::vector<double> x,
                                             std::size_t n_categories)
    : y_(std::move(outcomes)), x_(std::move(x)), n_categories_(n_categories) {
    if (y_.size() != x_.size()) throw StatsError("ordinal model: outcome and predictor lengths differ");
    if (n_categories_ < 2) throw StatsError("ordinal model needs at least two categories");
    for (int y : y_) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_categories_) throw StatsError("ordinal model: bad outcome");
    }
}

std::vector<double> ProportionalOddsModel::probabilities(std::span<const double> thresholds, double beta,
                                                         double x) {
    std::vector<double> p(thresholds.size() + 1);
    double prev = -kInf;
    for (std::size_t k = 0; k <= thresholds.size(); ++k) {
        const double upper = k < thresholds.size() ? thresholds[k] - beta * x : kInf;
        p[k] = interval_prob(upper, prev);
        prev = upper;
    }
    return p;
}

double ProportionalOddsModel::log_likelihood(std::span<const double> params) const {
    const std::size_t J = n_thresholds();
    const double beta = params[J];
    double ll = 0;
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const auto k = static_cast<std::size_t>(y_[i]);
        const double bx = beta * x_[i];
        const double upper = k < J ? params[k] - bx : kInf;
        const double lower = k > 0 ? params[k - 1] - bx : -kInf;
        ll += std::log(std::max(interval_prob(upper, lower), kFloor));
    }
    return ll;
}

std::vector<double> ProportionalOddsModel::gradient(std::span<const double> params) const {
    const std::size_t J = n_thresholds();
    const double beta = params[J];
    std::vector<double> g(J + 1, 0.0);
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const auto k = static_cast<std::size_t>(y_[i]);
        const double bx = beta * x_[i];
        const double upper = k < J ? params[k] - bx : kInf;
        const double lower = k > 0 ? params[k - 1] - bx : -kInf;
        const double p = std::max(interval_prob(upper, lower), kFloor);
        const double fu = k < J ? density(upper) : 0.0;
        const double fl = k > 0 ? density(lower) : 0.0;
        if (k < J) g[k] += fu / p;
        if (k > 0) g[k - 1] -= fl / p;
        g[J] -= x_[i] * (fu - fl) / p;
    }
    return g;
}

std::vector<double> ProportionalOddsModel::hessian(std::span<const double> params) const {
    const std::size_t J = n_thresholds();
    const std::size_t P = J + 1;
    const double beta = params[J];
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    Eigen::VectorXd du(P), dl(P), g(P);
    for (std::size_t i = 0; i < y_.size(); ++i) {
        const auto k = static_cast<std::size_t>(y_[i]);
        const double bx = beta * x_[i];
        const double upper = k < J ? params[k] - bx : kInf;
        const double lower = k > 0 ? params[k - 1] - bx : -kInf;
        const double p = std::max(interval_prob(upper, lower), kFloor);
        // d(eta)/d(params) for the two bounding linear predictors.
        du.setZero();
        dl.setZero();
        double fu = 0, fl = 0, su = 0, sl = 0;
        if (k < J) {
            du[static_cast<Eigen::Index>(k)] = 1.0;
            du[static_cast<Eigen::Index>(J)] = -x_[i];
            fu = density(upper);
            su = density_slope(upper);
        }
        if (k > 0) {
            dl[static_cast<Eigen::Index>(k - 1)] = 1.0;
            dl[static_cast<Eigen::Index>(J)] = -x_[i];
            fl = density(lower);
            sl = density_slope(lower);
        }
        g = (fu * du - fl * dl) / p;
        H += (su * du * du.transpose() - sl * dl * dl.transpose()) / p - g * g.transpose();
    }
    std::vector<double> out(P * P);
    for (std::size_t r = 0; r < P; ++r) {
        for (std::size_t c = 0; c < P; ++c) out[r * P + c] = H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    return out;
}

namespace {

Eigen::MatrixXd as_matrix(const std::vector<double>& flat, std::size_t P) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    for (std::size_t r = 0; r < P; ++r) {
        for (std::size_t c = 0; c < P; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * P + c];
    }
    return m;
}

bool increasing(const std::vector<double>& params, std::size_t J) {
    for (std::size_t k = 1; k < J; ++k) {
        if (!(params[k] > params[k - 1])) return false;
    }
    return std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); });
}

double inf_norm(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

} // namespace

OrdinalFit fit_ordinal(const std::vector<int>& scores, const std::vector<double>& predictor,
                       const OrdinalFitOptions& options) {
    if (scores.size() != predictor.size()) throw StatsError("fit_ordinal: scores and predictor differ in length");
    OrdinalFit fit;
    fit.n = scores.size();

    std::vector<int> present;
    for (int v : scores) {
        if (v < 1 || v > 4) throw StatsError("fit_ordinal: score out of range");
        if (std::find(present.begin(), present.end(), v) == present.end()) present.push_back(v);
    }
    std::sort(present.begin(), present.end());
    if (present.size() < 2) throw StatsError("fit_ordinal: need at least two distinct outcome categories");
    fit.categories = present;

    std::vector<int> y(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        y[i] = static_cast<int>(std::lower_bound(present.begin(), present.end(), scores[i]) - present.begin());
    }

    // Standardize.
    const double n = static_cast<double>(predictor.size());
    const double mu = std::accumulate(predictor.begin(), predictor.end(), 0.0) / n;
    double ss = 0;
    for (double v : predictor) ss += (v - mu) * (v - mu);
    const double sd = predictor.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    std::vector<double> x(predictor.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = sd > 0 ? (predictor[i] - mu) / sd : 0.0;

    const std::size_t K = present.size();
    const std::size_t J = K - 1;
    const std::size_t P = K;
    ProportionalOddsModel model(y, x, K);

    // Start at the empirical cumulative logits with beta = 0.
    std::vector<double> params(P, 0.0);
    {
        std::vector<double> counts(K, 0.0);
        for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
        double cum = 0;
        for (std::size_t k = 0; k < J; ++k) {
            cum += counts[k];
            const double q = cum / n;
            params[k] = std::log(q / (1.0 - q));
        }
    }

    double ll = model.log_likelihood(params);
    std::vector<double> grad = model.gradient(params);
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        if (inf_norm(grad) < options.gradient_tolerance) break;

        const Eigen::MatrixXd neg_h = -as_matrix(model.hessian(params), P);
        Eigen::VectorXd g(P);
        for (std::size_t i = 0; i < P; ++i) g[static_cast<Eigen::Index>(i)] = grad[i];

        // Newton direction; Levenberg damping if the information is not PD.
        Eigen::VectorXd step;
        double damping = 0;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd a = neg_h;
            a.diagonal().array() += damping;
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() == Eigen::Success) {
                step = llt.solve(g);
                break;
            }
            damping = damping == 0 ? 1e-6 * std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff()) : damping * 10;
        }
        if (step.size() == 0) step = g;

        double t = 1.0;
        std::vector<double> trial(P);
        bool improved = false;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            for (std::size_t i = 0; i < P; ++i) trial[i] = params[i] + t * step[static_cast<Eigen::Index>(i)];
            if (!increasing(trial, J)) continue;
            const double ll_trial = model.log_likelihood(trial);
            if (ll_trial >= ll - 1e-12 * std::max(1.0, std::fabs(ll))) {
                params = trial;
                ll = ll_trial;
                improved = true;
                break;
            }
        }
        grad = model.gradient(params);
        if (std::fabs(params[J]) > options.separation_bound) {
            fit.separated = true;
            ++it;
            break;
        }
        if (!improved) {
            ++it;
            break;
        }
    }

    fit.iterations = it;
    fit.log_likelihood = ll;
    fit.gradient_norm = inf_norm(grad);
    fit.converged = !fit.separated && fit.gradient_norm < options.gradient_tolerance;
    fit.thresholds.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(J));
    fit.beta = params[J];

    const Eigen::MatrixXd info = -as_matrix(model.hessian(params), P);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (lu.isInvertible()) {
        const Eigen::MatrixXd cov = lu.inverse();
        const double var = cov(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(J));
        fit.se = var > 0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    } else {
        fit.se = std::numeric_limits<double>::quiet_NaN();
    }
    fit.ci_low = fit.beta - options.z * fit.se;
    fit.ci_high = fit.beta + options.z * fit.se;

    if (fit.separated) {
        fit.message = "separation: |beta| diverged";
    } else if (!fit.converged) {
        fit.message = "did not converge within " + std::to_string(options.max_iterations) + " iterations";
    } else if (sd == 0) {
        fit.message = "constant predictor";
    }
    return fit;
}

OrdinalFit fit_ordinal(const ScoreVector& scores, const std::map<std::string, double>& predictor,
                       const OrdinalFitOptions& options) {
    std::vector<int> y;
    std::vector<double> x;
    for (const auto& [id, v] : scores.pairs) {
        auto it = predictor.find(id);
        if (it == predictor.end()) throw StatsError("fit_ordinal: no predictor value for item " + id);
        y.push_back(v);
        x.push_back(it->second);
    }
    return fit_ordinal(y, x, options);
}

} // namespace metacot
