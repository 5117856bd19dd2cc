#pragma once
// Fixtures and independent oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "metacot/config.hpp"
#include "metacot/corpus.hpp"
#include "metacot/pipeline.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path data_dir() { return METACOT_DATA_DIR; }

// A scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("metacot-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// The shipped sample config with cache and output redirected to `scratch`.
inline metacot::Config sample_config(const fs::path& scratch) {
    auto cfg = metacot::load_config(data_dir() / "config.json");
    cfg.cache_dir = scratch / "cache";
    cfg.output_dir = scratch / "out";
    return cfg;
}

inline metacot::MetaphorItem bagpipe() {
    metacot::MetaphorItem item;
    item.id = "bagpipe";
    item.sentence = "A bagpipe is a newborn baby.";
    item.subject = "A bagpipe";
    item.object = "a newborn baby";
    item.paraphrases = {{{"A bagpipe is loud.", 4},
                         {"A bagpipe is delicate.", 3},
                         {"A bagpipe is a musical instrument.", 2},
                         {"A bagpipe is quiet.", 1}}};
    return item;
}

// Direct textbook Pearson: sum (x-mx)(y-my) / (sx sy (n-1)) with sample sds.
inline double direct_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double sx = std::sqrt(sxx / (n - 1)), sy = std::sqrt(syy / (n - 1));
    return sxy / (sx * sy * (n - 1));
}

// Exact percentile interval of the bootstrap mean for a tiny sample, by
// enumerating all n^n equally likely resamples. Quantiles are the type-1
// (inverse-CDF) definition: the smallest value whose CDF reaches q.
inline std::pair<double, double> enumerated_bootstrap_ci(const std::vector<int>& sample, double level) {
    const std::size_t n = sample.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= n;
    std::map<double, std::size_t> dist;
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s += sample[c % n];
            c /= n;
        }
        ++dist[s / static_cast<double>(n)];
    }
    const auto quantile = [&](double q) {
        std::size_t cum = 0;
        for (const auto& [v, k] : dist) {
            cum += k;
            if (static_cast<double>(cum) / static_cast<double>(total) >= q) return v;
        }
        return dist.rbegin()->first;
    };
    const double alpha = 1 - level;
    return {quantile(alpha / 2), quantile(1 - alpha / 2)};
}

// Inverse-CDF sampler for the proportional-odds model:
// P(Y <= k | x) = logistic(theta_k - beta x); Y in 1..thresholds+1.
struct OrdinalSample {
    std::vector<int> y;
    std::vector<double> x;
};

inline OrdinalSample sample_proportional_odds(std::size_t n, double beta, const std::vector<double>& theta,
                                              std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    OrdinalSample s;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = normal(eng);
        const double u = unif(eng);
        int y = static_cast<int>(theta.size()) + 1;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            if (u <= 1.0 / (1.0 + std::exp(-(theta[k] - beta * x)))) {
                y = static_cast<int>(k) + 1;
                break;
            }
        }
        s.x.push_back(x);
        s.y.push_back(y);
    }
    return s;
}

} // namespace testsupport
