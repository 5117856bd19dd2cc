#include "metacot/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string_view>

#include <boost/math/distributions/students_t.hpp>

#include "metacot/error.hpp"
#include "metacot/rng.hpp"

namespace metacot {

std::vector<int> ScoreVector::values() const {
    std::vector<int> out;
    out.reserve(pairs.size());
    for (const auto& [id, v] : pairs) out.push_back(v);
    return out;
}

void ScoreVector::validate() const {
    std::set<std::string_view> seen;
    for (const auto& [id, v] : pairs) {
        if (v < 1 || v > 4) throw ValidationError("run " + run_id + ": score out of range for " + id);
        if (!seen.insert(id).second) throw ValidationError("run " + run_id + ": duplicate item " + id);
    }
}

double mean(const std::vector<int>& values) {
    if (values.empty()) throw StatsError("mean of an empty score vector");
    const auto sum = std::accumulate(values.begin(), values.end(), std::int64_t{0});
    return static_cast<double>(sum) / static_cast<double>(values.size());
}

double mean_appropriateness(const ScoreVector& scores) { return mean(scores.values()); }

namespace {

// Inverse empirical CDF on sorted data: smallest x with F(x) >= q.
double quantile_type1(const std::vector<double>& sorted, double q) {
    const auto n = sorted.size();
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
    if (k == 0) k = 1;
    if (k > n) k = n;
    return sorted[k - 1];
}

} // namespace

BootstrapResult bootstrap_ci(const std::vector<int>& scores, std::size_t reps, double level, std::uint64_t seed) {
    if (scores.empty()) throw StatsError("bootstrap of an empty score vector");
    if (reps < 1) throw StatsError("bootstrap needs reps >= 1");
    if (!(level > 0 && level < 1)) throw StatsError("bootstrap level must be in (0, 1)");

    const auto n = scores.size();
    std::vector<double> means(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        rng::Engine eng(rng::derive(seed, r));
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += scores[rng::below(eng, n)];
        means[r] = static_cast<double>(sum) / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());

    BootstrapResult out;
    out.point = mean(scores);
    out.ci_low = quantile_type1(means, (1.0 - level) / 2.0);
    out.ci_high = quantile_type1(means, (1.0 + level) / 2.0);
    out.reps = reps;
    out.level = level;
    out.seed = seed;
    return out;
}

BootstrapResult bootstrap_ci(const ScoreVector& scores, std::size_t reps, double level, std::uint64_t seed) {
    return bootstrap_ci(scores.values(), reps, level, seed);
}

ChanceResult chance_test(const std::vector<int>& scores, std::size_t reps, std::uint64_t seed) {
    if (scores.empty()) throw StatsError("chance test of an empty score vector");
    if (reps < 1) throw StatsError("chance test needs reps >= 1");
    const auto n = static_cast<std::int64_t>(scores.size());
    const auto observed_sum = std::accumulate(scores.begin(), scores.end(), std::int64_t{0});
    // |mean - 2.5| compared as |2*sum - 5n| to stay in exact integers.
    const auto observed_dev = std::llabs(2 * observed_sum - 5 * n);

    ChanceResult out;
    out.observed_mean = static_cast<double>(observed_sum) / static_cast<double>(n);
    out.n = scores.size();
    out.reps = reps;
    out.seed = seed;
    for (std::size_t r = 0; r < reps; ++r) {
        rng::Engine eng(rng::derive(seed, r));
        std::int64_t sum = 0;
        std::uint64_t bits = 0;
        int left = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            if (left == 0) {
                bits = eng();
                left = 32;
            }
            sum += static_cast<std::int64_t>(bits & 3u) + 1;
            bits >>= 2;
            --left;
        }
        if (std::llabs(2 * sum - 5 * n) >= observed_dev) ++out.hits;
    }
    return out;
}

double chance_p_value(const std::vector<int>& scores, std::size_t reps, std::uint64_t seed) {
    return chance_test(scores, reps, seed).p_value();
}

double chance_p_value(const ScoreVector& scores, std::size_t reps, std::uint64_t seed) {
    return chance_p_value(scores.values(), reps, seed);
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw StatsError("pearson: vectors differ in length");
    const auto n = x.size();
    if (n < 3) throw StatsError("pearson: need at least 3 pairs, got " + std::to_string(n));
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw StatsError("pearson: zero variance");

    PearsonResult out;
    out.n = n;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    const double one_minus = 1.0 - out.r * out.r;
    if (one_minus <= 0) {
        out.p = 0;
    } else {
        const double t = std::fabs(out.r) * std::sqrt(df / one_minus);
        boost::math::students_t dist(df);
        out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    }
    return out;
}

PearsonResult pearson(const ScoreVector& a, const ScoreVector& b) {
    std::map<std::string_view, int> by_id;
    for (const auto& [id, v] : b.pairs) by_id.emplace(id, v);
    std::vector<double> x, y;
    for (const auto& [id, v] : a.pairs) {
        if (auto it = by_id.find(id); it != by_id.end()) {
            x.push_back(v);
            y.push_back(it->second);
        }
    }
    return pearson(x, y);
}

double familiarity_gap(const ScoreVector& scores, const std::map<std::string, double>& familiarity,
                       std::size_t k) {
    if (k == 0) throw StatsError("familiarity gap needs k >= 1");
    struct Row {
        double fam;
        std::string_view id;
        int score;
    };
    std::vector<Row> rows;
    for (const auto& [id, v] : scores.pairs) {
        if (auto it = familiarity.find(id); it != familiarity.end()) rows.push_back({it->second, id, v});
    }
    if (rows.size() < 2 * k) {
        throw StatsError("familiarity gap needs " + std::to_string(2 * k) + " items, got " +
                         std::to_string(rows.size()));
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.fam != b.fam ? a.fam < b.fam : a.id < b.id; });
    double low = 0, high = 0;
    for (std::size_t i = 0; i < k; ++i) {
        low += rows[i].score;
        high += rows[rows.size() - 1 - i].score;
    }
    return (high - low) / static_cast<double>(k);
}

Histogram histogram(const std::vector<int>& scores) {
    Histogram h;
    for (int v : scores) {
        if (v < 1 || v > 4) throw StatsError("histogram: score out of range");
        ++h.counts[static_cast<std::size_t>(v - 1)];
    }
    return h;
}

Histogram histogram(const ScoreVector& scores) {
    auto h = histogram(scores.values());
    h.n_invalid = scores.n_invalid;
    return h;
}

} // namespace metacot
