#pragma once
// Proportional-odds (cumulative logit) regression fitted by maximum likelihood.
//
//   P(Y <= k | x) = logistic(theta_k - beta * x),  theta_1 < ... < theta_J
//
// A positive beta shifts mass toward higher categories as x grows. Intervals
// are Wald intervals from the observed information, standing in for the
// credible intervals of a Bayesian fit.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metacot/stats.hpp"

namespace metacot {

// Log-likelihood of the cumulative logit model with its analytic derivatives.
// Parameters are laid out as (theta_0 .. theta_{J-1}, beta); outcomes are
// category indices 0..J.
class ProportionalOddsModel {
public:
    ProportionalOddsModel(std::vector<int> outcomes, std::vector<double> x, std::size_t n_categories);

    std::size_t n_thresholds() const { return n_categories_ - 1; }
    std::size_t n_params() const { return n_categories_; }
    std::size_t n_obs() const { return y_.size(); }

    double log_likelihood(std::span<const double> params) const;
    std::vector<double> gradient(std::span<const double> params) const;
    // Row-major n_params x n_params.
    std::vector<double> hessian(std::span<const double> params) const;

    // Category probabilities at predictor value x.
    static std::vector<double> probabilities(std::span<const double> thresholds, double beta, double x);

private:
    std::vector<int> y_;
    std::vector<double> x_;
    std::size_t n_categories_;
};

struct OrdinalFitOptions {
    int max_iterations = 100;
    double gradient_tolerance = 1e-8;
    double separation_bound = 30.0; // |beta| on the standardized scale
    double z = 1.959963984540054;   // two-sided 95%
};

struct OrdinalFit {
    double beta = 0;
    double se = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::vector<double> thresholds;
    std::vector<int> categories; // observed outcome values, ascending
    double log_likelihood = 0;
    double gradient_norm = 0;
    bool converged = false;
    bool separated = false;
    int iterations = 0;
    std::size_t n = 0;
    std::string message;
};

// Standardizes the predictor (mean 0, sd 1) over the scored items that have
// it, then fits. Categories absent from the data are collapsed: cutpoints are
// fitted only between observed neighbours. Throws StatsError with fewer than
// two observed categories or a scored item lacking the predictor.
OrdinalFit fit_ordinal(const ScoreVector& scores, const std::map<std::string, double>& predictor,
                       const OrdinalFitOptions& options = {});

// Same, on raw vectors of scores (1..4) and predictor values.
OrdinalFit fit_ordinal(const std::vector<int>& scores, const std::vector<double>& predictor,
                       const OrdinalFitOptions& options = {});

} // namespace metacot
