#pragma once
// Statistics over appropriateness scores: means, percentile bootstrap,
// permutation-style comparison against uniform chance, Pearson correlation,
// top/bottom familiarity gaps and score histograms.
//
// Every stochastic routine is a pure function of (data, reps, seed). Replicate
// r draws from its own stream derived from (seed, r), so results do not depend
// on evaluation order.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metacot/error.hpp"

namespace metacot {

struct ScoreVector {
    std::string run_id;
    std::vector<std::pair<std::string, int>> pairs; // (item_id, appropriateness 1..4)
    std::size_t n_invalid = 0;

    std::vector<int> values() const;
    // Throws ValidationError on out-of-range scores or duplicate ids.
    void validate() const;
};

class StatsError : public Error {
public:
    using Error::Error;
};

double mean_appropriateness(const ScoreVector& scores);
double mean(const std::vector<int>& values);

inline constexpr std::size_t kDefaultReps = 10000;
inline constexpr double kChanceMean = 2.5;

struct BootstrapResult {
    double point = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::size_t reps = 0;
    double level = 0.95;
    std::uint64_t seed = 0;

    bool operator==(const BootstrapResult&) const = default;
};

// Percentile interval: inverse empirical CDF of the `reps` resample means at
// (1-level)/2 and (1+level)/2.
BootstrapResult bootstrap_ci(const std::vector<int>& scores, std::size_t reps, double level, std::uint64_t seed);
BootstrapResult bootstrap_ci(const ScoreVector& scores, std::size_t reps, double level, std::uint64_t seed);

struct ChanceResult {
    double observed_mean = 0;
    std::size_t n = 0;
    std::size_t hits = 0; // simulated means at least as far from 2.5 as observed
    std::size_t reps = 0;
    std::uint64_t seed = 0;

    double p_value() const { return static_cast<double>(hits) / static_cast<double>(reps); }
    // True when no simulated mean was as extreme; p is then reported as < 1/reps.
    bool below_resolution() const { return hits == 0; }
};

// Simulates `reps` means of n i.i.d. uniform draws from {1,2,3,4}; two-sided.
ChanceResult chance_test(const std::vector<int>& scores, std::size_t reps, std::uint64_t seed);
double chance_p_value(const std::vector<int>& scores, std::size_t reps, std::uint64_t seed);
double chance_p_value(const ScoreVector& scores, std::size_t reps, std::uint64_t seed);

struct PearsonResult {
    double r = 0;
    double p = 1;
    std::size_t n = 0;
};

// Sample correlation with a two-sided t-test on n-2 degrees of freedom.
// Throws StatsError when n < 3 or either side has zero variance.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);
// Pairs the two runs by item id (items scored in both), then correlates.
PearsonResult pearson(const ScoreVector& a, const ScoreVector& b);

inline constexpr std::size_t kDefaultGapK = 30;

// Mean over the k most familiar minus mean over the k least familiar items.
// Items are ordered by (familiarity, item_id).
double familiarity_gap(const ScoreVector& scores, const std::map<std::string, double>& familiarity,
                       std::size_t k = kDefaultGapK);

struct Histogram {
    std::array<std::size_t, 4> counts{}; // index v-1 holds the count of score v
    std::size_t n_invalid = 0;

    std::size_t n_valid() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
    bool operator==(const Histogram&) const = default;
};

Histogram histogram(const std::vector<int>& scores);
Histogram histogram(const ScoreVector& scores);

} // namespace metacot
