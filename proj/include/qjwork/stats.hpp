// Work distributions, moments and fluctuation-theorem estimators
//
// Standard errors are sample standard deviations (N - 1 denominator) over
// sqrt(N), computed directly from the transformed samples (W, W^2, exp(-beta W),
// exp(-R)). Confidence intervals are +/- 1.96 sigma.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "qjwork/jump_engine.hpp"
#include "qjwork/model.hpp"
#include "qjwork/renorm.hpp"

namespace qjwork {

inline constexpr double kConfidenceZ = 1.96;

struct Estimate {
    double mean = 0.0;
    double sem = 0.0;
    double ci_low() const { return mean - kConfidenceZ * sem; }
    double ci_high() const { return mean + kConfidenceZ * sem; }
};

/// Mergeable (count, sum, sum of squares) accumulator.
struct MeanAccumulator {
    std::int64_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        ++count;
        sum += x;
        sum_sq += x * x;
    }
    void merge(const MeanAccumulator& o) {
        count += o.count;
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    Estimate estimate() const {
        if (count == 0) return {};
        const double n = static_cast<double>(count);
        const double mean = sum / n;
        if (count < 2) return {mean, 0.0};
        const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
        return {mean, std::sqrt(var / n)};
    }
};

/// Two-pass mean and SEM of a sample.
inline Estimate estimate(std::span<const double> x) {
    if (x.empty()) return {};
    double s = 0.0;
    for (double v : x) s += v;
    const double n = static_cast<double>(x.size());
    const double mean = s / n;
    if (x.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

struct WorkEnsemble {
    std::vector<double> samples;
    int dynamics_order = 0;
    int work_order = 0;

    std::size_t size() const { return samples.size(); }
};

struct WorkHistogram {
    double bin_width = 0.0;
    std::int64_t first_bin = 0;  // bin i is centered on (first_bin + i) * bin_width
    std::vector<std::int64_t> counts;
    std::vector<double> density;

    double center(std::size_t i) const {
        return static_cast<double>(first_bin + static_cast<std::int64_t>(i)) * bin_width;
    }
    std::size_t occupied_bins() const {
        return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(),
                                                      [](std::int64_t c) { return c > 0; }));
    }
};

inline std::int64_t bin_index(double w, double bin_width) {
    return static_cast<std::int64_t>(std::llround(w / bin_width));
}

/// Bins centered on integer multiples of bin_width; density = count/(N width).
inline WorkHistogram histogram(const WorkEnsemble& ens, double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("histogram: bin_width must be > 0");
    if (ens.samples.empty()) throw std::invalid_argument("histogram: empty ensemble");
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (double w : ens.samples) {
        if (!std::isfinite(w)) throw std::invalid_argument("histogram: non-finite work sample");
        const auto i = bin_index(w, bin_width);
        lo = std::min(lo, i);
        hi = std::max(hi, i);
    }
    WorkHistogram h;
    h.bin_width = bin_width;
    h.first_bin = lo;
    h.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
    for (double w : ens.samples) ++h.counts[static_cast<std::size_t>(bin_index(w, bin_width) - lo)];
    const double norm = 1.0 / (static_cast<double>(ens.samples.size()) * bin_width);
    h.density.reserve(h.counts.size());
    for (auto c : h.counts) h.density.push_back(static_cast<double>(c) * norm);
    return h;
}

struct WorkMoments {
    Estimate first;
    Estimate second;
};

inline WorkMoments moments(const WorkEnsemble& ens) {
    if (ens.samples.size() < 2) throw std::invalid_argument("moments: need at least two samples");
    std::vector<double> sq;
    sq.reserve(ens.samples.size());
    for (double w : ens.samples) sq.push_back(w * w);
    return {estimate(ens.samples), estimate(sq)};
}

struct JarzynskiResult {
    Estimate mean_exp;       // <exp(-beta W)>
    double deviation = 0.0;  // |1 - <exp(-beta W)> exp(beta dF)|
    double deviation_sem = 0.0;
};

inline JarzynskiResult jarzynski(const WorkEnsemble& ens, double beta, double delta_f) {
    std::vector<double> x;
    x.reserve(ens.samples.size());
    for (double w : ens.samples) x.push_back(std::exp(-beta * w));
    JarzynskiResult r;
    r.mean_exp = estimate(x);
    const double scale = std::exp(beta * delta_f);
    r.deviation = std::abs(1.0 - r.mean_exp.mean * scale);
    r.deviation_sem = r.mean_exp.sem * scale;
    return r;
}

/// Z(t) = 2 cosh(beta omega01^(1)(t) / 2)
inline double partition_function(const SystemConfig& cfg, double t) {
    return 2.0 * std::cosh(0.5 * cfg.beta * frame1(cfg, t).omega01);
}

/// dF = -ln[Z(t_final) / Z(t_init)] / beta, evaluated in a form that stays
/// finite for large beta.
inline double free_energy_difference(const SystemConfig& cfg, double t_init, double t_final) {
    // ln(2 cosh(x)) = |x| + log1p(exp(-2|x|))
    auto log_z = [&](double t) {
        const double x = 0.5 * cfg.beta * frame1(cfg, t).omega01;
        return x + std::log1p(std::exp(-2.0 * x));
    };
    return -(log_z(t_final) - log_z(t_init)) / cfg.beta;
}

struct EntropyProduction {
    double R = 0.0;
    bool finite = true;  // false when a rate in the product vanishes
};

/// R = ln{ P[E_k(t_init)] / Pbar[E_l(t_final)] * prod_j Gamma_mj / Gammabar_mj },
/// with Gibbs boundary distributions at t_init and t_final.
inline EntropyProduction entropy_production(const TrajectoryRecord& rec, const SystemConfig& cfg) {
    auto log_gibbs = [&](double energy, double t) {
        const double x = 0.5 * cfg.beta * frame1(cfg, t).omega01;
        return -cfg.beta * energy - (x + std::log1p(std::exp(-2.0 * x)));
    };
    EntropyProduction out;
    double r = log_gibbs(rec.E_init, cfg.t_init()) - log_gibbs(rec.E_final, cfg.t_final());
    for (const auto& e : rec.events) {
        if (e.channel == kDephasing) continue;
        if (!(e.gamma_forward > 0.0) || !(e.gamma_reversed > 0.0)) {
            out.finite = false;
            out.R = e.gamma_forward > 0.0 ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
            return out;
        }
        r += std::log(e.gamma_forward / e.gamma_reversed);
    }
    out.R = r;
    return out;
}

inline Estimate ift_check(std::span<const TrajectoryRecord> records, const SystemConfig& cfg) {
    std::vector<double> x;
    x.reserve(records.size());
    for (const auto& rec : records) x.push_back(std::exp(-entropy_production(rec, cfg).R));
    return estimate(x);
}

/// exp(-R) samples given precomputed R values.
inline Estimate ift_estimate(std::span<const double> entropy) {
    std::vector<double> x;
    x.reserve(entropy.size());
    for (double r : entropy) x.push_back(std::exp(-r));
    return estimate(x);
}

struct FluctuationReport {
    int dynamics_order = 0;
    int work_order = 0;
    std::int64_t n_traj = 0;
    JarzynskiResult jarzynski;
    WorkMoments moments;
    bool has_ift = false;
    Estimate ift;
};

inline FluctuationReport fluctuation_report(const WorkEnsemble& ens, const SystemConfig& cfg,
                                            std::span<const double> entropy = {}) {
    FluctuationReport r;
    r.dynamics_order = ens.dynamics_order;
    r.work_order = ens.work_order;
    r.n_traj = static_cast<std::int64_t>(ens.samples.size());
    r.jarzynski = jarzynski(ens, cfg.beta,
                            free_energy_difference(cfg, cfg.t_init(), cfg.t_final()));
    r.moments = moments(ens);
    if (!entropy.empty()) {
        r.has_ift = true;
        r.ift = ift_estimate(entropy);
    }
    return r;
}

} // namespace qjwork
