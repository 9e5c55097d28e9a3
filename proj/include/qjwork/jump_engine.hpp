// Quantum-jump unraveling with the two-measurement protocol
//
// A trajectory starts from a Gibbs-sampled projective energy measurement in the
// instantaneous eigenbasis, evolves under the first-order no-jump update
//     psi <- (1 - i dt H_eff) psi / N
// with at most one jump per step, and ends with a Born-rule energy measurement.
// Rates, jump operators and H_eff are evaluated at the left end of each step.
//
// Random numbers come from KeyedUniforms addressed by (seed, trajectory index,
// counter, stream), so a record depends only on (config, order, index).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qjwork/dissipation.hpp"
#include "qjwork/model.hpp"
#include "qjwork/philox.hpp"
#include "qjwork/renorm.hpp"

namespace qjwork {

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct QuantumState {
    Vector2c amp{cplx(1.0), cplx(0.0)};
    double norm_sq = 1.0;  // squared norm of the last unnormalized update

    static QuantumState from(const Vector2c& v) {
        QuantumState s;
        s.norm_sq = v.squaredNorm();
        s.amp = v / std::sqrt(s.norm_sq);
        return s;
    }
};

struct JumpEvent {
    double t = 0.0;
    int channel = 0;
    double omega01_n = 0.0;       // gap of the dynamics frame at t
    double gamma_forward = 0.0;   // Gamma_(n,channel)(t)
    double gamma_reversed = 0.0;  // reversed-process rate of the same channel
};

inline double heat_of_jump(const JumpEvent& e) {
    switch (e.channel) {
    case kDecay: return e.omega01_n;
    case kExcitation: return -e.omega01_n;
    default: return 0.0;
    }
}

struct TrajectoryRecord {
    std::uint64_t index = 0;
    int order = 0;      // dynamics order
    int k_init = kGround;
    int l_final = kGround;
    double E_init = 0.0;
    double E_final = 0.0;
    std::vector<JumpEvent> events;

    double delta_energy() const { return E_final - E_init; }

    double heat_total() const {
        double q = 0.0;
        for (const auto& e : events) q += heat_of_jump(e);
        return q;
    }

    /// Work with heats assigned by the dynamics order.
    double work() const { return delta_energy() + heat_total(); }
};

/// W^(n') = Delta E_S + sum_j (+/-) omega01^(n')(t_j), reusing the recorded
/// jump times and channels.
inline double reassign_work(const TrajectoryRecord& rec, int n_prime, const SystemConfig& cfg) {
    checked_order(n_prime);
    if (n_prime == rec.order) return rec.work();
    double q = 0.0;
    for (const auto& e : rec.events) {
        if (e.channel == kDephasing) continue;
        const double gap = frame_at(cfg, e.t, n_prime).omega01;
        q += e.channel == kDecay ? gap : -gap;
    }
    return rec.delta_energy() + q;
}

inline Matrix2c effective_hamiltonian(double t, int n, const SystemConfig& cfg) {
    const RateSet r = rates_at(frame_at(cfg, t, n), cfg);
    return hamiltonian_at(cfg, t) - cplx(0.0, 0.5) * r.decay_sum();
}

namespace detail {

inline std::array<double, 3> channel_probabilities(const Vector2c& psi, const Frame& f,
                                                   const RateSet& r, double dt) {
    const double pe = std::norm(f.ket_e.dot(psi));
    const double pg = std::norm(f.ket_g.dot(psi));
    return {dt * r.gamma_down * pe, dt * r.gamma_up * pg, dt * r.gamma_phi * (pe + pg)};
}

inline Vector2c apply_collapse(const Vector2c& psi, int channel, const RateSet& r) {
    const Vector2c out = r.unit_ops[static_cast<std::size_t>(channel)] * psi;
    const double nrm = out.norm();
    // anything at round-off level relative to psi has zero jump probability
    if (!(nrm > 1e-12 * psi.norm()) || r.gamma(channel) <= 0.0)
        throw ContractViolation("collapse requested along a channel with zero probability");
    return out / nrm;
}

} // namespace detail

/// p_(n,i) = dt <psi| L_i^dagger L_i |psi> for i = 0, 1, 2.
inline std::array<double, 3> jump_probabilities(const QuantumState& psi, double t, double dt,
                                                int n, const SystemConfig& cfg) {
    const Frame f = frame_at(cfg, t, n);
    return detail::channel_probabilities(psi.amp, f, rates_at(f, cfg), dt);
}

/// First-order no-jump update. Returns the renormalized state and N^2.
inline std::pair<QuantumState, double> no_jump_step(const QuantumState& psi, double t,
                                                    double dt, int n,
                                                    const SystemConfig& cfg) {
    const Matrix2c m = Matrix2c::Identity() - cplx(0.0, dt) * effective_hamiltonian(t, n, cfg);
    QuantumState next = QuantumState::from(m * psi.amp);
    return {next, next.norm_sq};
}

/// State after a jump along `channel`, L_i psi / ||L_i psi||.
inline QuantumState collapse(const QuantumState& psi, int channel, double t, int n,
                             const SystemConfig& cfg) {
    if (channel < 0 || channel > 2) throw ContractViolation("jump channel must be 0, 1 or 2");
    const RateSet r = rates_at(frame_at(cfg, t, n), cfg);
    QuantumState out;
    out.amp = detail::apply_collapse(psi.amp, channel, r);
    return out;
}

struct Measurement {
    int index = kGround;
    double energy = 0.0;
    QuantumState state;
};

/// Thermal sampling of the instantaneous eigenbasis at t_init from one uniform
/// draw u in [0, 1).
inline Measurement initial_measurement(double u, const SystemConfig& cfg) {
    const Frame f = frame1(cfg, cfg.t_init());
    const double p_excited = 1.0 / (1.0 + std::exp(cfg.beta * f.omega01));
    Measurement m;
    if (u < p_excited) {
        m.index = kExcited;
        m.energy = f.E_e;
        m.state.amp = f.ket_e;
    } else {
        m.index = kGround;
        m.energy = f.E_g;
        m.state.amp = f.ket_g;
    }
    return m;
}

/// Born-rule measurement in the eigenbasis of H_S(t_final).
inline Measurement final_measurement(double u, const QuantumState& psi, double t_final,
                                     const SystemConfig& cfg) {
    const Frame f = frame1(cfg, t_final);
    const double pe = std::norm(f.ket_e.dot(psi.amp));
    const double pg = std::norm(f.ket_g.dot(psi.amp));
    Measurement m;
    if (u * (pe + pg) < pe) {
        m.index = kExcited;
        m.energy = f.E_e;
        m.state.amp = f.ket_e;
    } else {
        m.index = kGround;
        m.energy = f.E_g;
        m.state.amp = f.ket_g;
    }
    return m;
}

template <class URBG>
double draw_unit(URBG& rng) {
    return std::generate_canonical<double, 53>(rng);
}

template <class URBG>
Measurement initial_measurement(URBG& rng, const SystemConfig& cfg) {
    return initial_measurement(draw_unit(rng), cfg);
}

template <class URBG>
Measurement final_measurement(URBG& rng, const QuantumState& psi, double t_final,
                              const SystemConfig& cfg) {
    return final_measurement(draw_unit(rng), psi, t_final, cfg);
}

// ---------------------------------------------------------------------------
// Batched trajectory engine

/// How the per-step jump decision consumes random numbers.
///  - survival_threshold: one uniform r per jump interval; a jump happens in the
///    first step where the accumulated no-jump product prod(1 - p_k) drops
///    below r. Statistically identical to per_step and far cheaper.
///  - per_step: one uniform per step compared against p_k.
enum class JumpSampling { survival_threshold, per_step };

struct EngineOptions {
    JumpSampling sampling = JumpSampling::survival_threshold;
    /// rho_ee samples at steps 0, s, 2s, ..., n_steps with s = n_steps /
    /// population_intervals; 0 disables sampling.
    std::int64_t population_intervals = 0;
    std::int64_t block_steps = 4096;
    /// Upper bound on the shared precomputed step table.
    std::int64_t max_table_steps = 4'000'000;
};

/// Per-step data of the no-jump update: propagator I - i dt H_eff and dt*K with
/// K = sum_i L_i^dagger L_i (Hermitian, stored as ee, gg, eg entries).
struct StepCoefficients {
    cplx m_ee, m_eg, m_ge, m_gg;
    double k_ee, k_gg;
    cplx k_eg;
};

inline StepCoefficients step_coefficients(const SystemConfig& cfg, int n, std::int64_t k) {
    const double dt = cfg.dt();
    const double t = cfg.step_time(k);
    const Matrix2c kmat = rates_at(frame_at(cfg, t, n), cfg).decay_sum();
    const Matrix2c heff = hamiltonian_at(cfg, t) - cplx(0.0, 0.5) * kmat;
    const Matrix2c m = Matrix2c::Identity() - cplx(0.0, dt) * heff;
    return {m(0, 0), m(0, 1), m(1, 0), m(1, 1),
            dt * kmat(0, 0).real(), dt * kmat(1, 1).real(), dt * kmat(0, 1)};
}

struct PopulationSums {
    std::vector<double> sum;
    std::vector<double> sum_sq;

    void resize(std::size_t n) {
        sum.assign(n, 0.0);
        sum_sq.assign(n, 0.0);
    }
    void merge(const PopulationSums& o) {
        if (sum.empty()) {
            *this = o;
            return;
        }
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += o.sum[i];
            sum_sq[i] += o.sum_sq[i];
        }
    }
};

struct ChunkResult {
    std::vector<TrajectoryRecord> records;
    PopulationSums populations;
};

namespace rng_stream {
inline constexpr std::uint32_t kStart = 0;     // (initial measurement, first threshold)
inline constexpr std::uint32_t kJump = 1;      // (channel, next threshold), counter = jump no.
inline constexpr std::uint32_t kStep = 2;      // (decision, channel), counter = step no.
inline constexpr std::uint32_t kFinal = 3;
} // namespace rng_stream

class TrajectoryEngine {
public:
    TrajectoryEngine(const SystemConfig& cfg, int order, EngineOptions opt = {})
        : cfg_(cfg), order_(checked_order(order)), opt_(opt), uniforms_(cfg.seed) {
        cfg_.validate();
        const std::int64_t n = cfg_.n_steps;
        if (opt_.population_intervals > 0) {
            if (n % opt_.population_intervals != 0)
                throw ConfigError("n_steps must be a multiple of the population sampling intervals");
            pop_stride_ = n / opt_.population_intervals;
        }
        opt_.block_steps = std::max<std::int64_t>(1, opt_.block_steps);
        if (n <= opt_.max_table_steps) {
            table_.reserve(static_cast<std::size_t>(n));
            for (std::int64_t k = 0; k < n; ++k) table_.push_back(step_coefficients(cfg_, order_, k));
        }
    }

    const SystemConfig& config() const { return cfg_; }
    int order() const { return order_; }
    std::size_t population_points() const {
        return pop_stride_ > 0 ? static_cast<std::size_t>(opt_.population_intervals + 1) : 0;
    }
    double population_time(std::size_t i) const {
        return cfg_.step_time(static_cast<std::int64_t>(i) * pop_stride_);
    }

    /// Simulates trajectories first, ..., first + count - 1.
    ChunkResult run(std::uint64_t first, std::size_t count) const {
        ChunkResult out;
        out.populations.resize(population_points());
        std::vector<Walker> walkers(count);
        for (std::size_t w = 0; w < count; ++w) start(walkers[w], first + w);

        const std::int64_t n = cfg_.n_steps;
        const bool per_step = opt_.sampling == JumpSampling::per_step;
        Lanes lanes;
        if (!per_step) lanes.load(walkers);
        std::vector<StepCoefficients> local;
        for (std::int64_t k0 = 0; k0 < n; k0 += opt_.block_steps) {
            const std::int64_t k1 = std::min(n, k0 + opt_.block_steps);
            const StepCoefficients* block = nullptr;
            if (!table_.empty()) {
                block = table_.data() + k0;
            } else {
                local.clear();
                for (std::int64_t k = k0; k < k1; ++k) local.push_back(step_coefficients(cfg_, order_, k));
                block = local.data();
            }
            if (per_step) {
                for (auto& w : walkers) advance(w, k0, k1, block, out.populations);
            } else {
                advance_lockstep(walkers, lanes, k0, k1, block, out.populations);
            }
        }
        if (!per_step) lanes.store(walkers);

        out.records.reserve(count);
        for (auto& w : walkers) {
            finish(w, out.populations);
            out.records.push_back(std::move(w.record));
        }
        return out;
    }

    TrajectoryRecord run_one(std::uint64_t index) const { return std::move(run(index, 1).records[0]); }

private:
    struct Walker {
        Vector2c psi;
        double survival = 1.0;
        double threshold = 0.0;
        std::uint32_t jumps = 0;
        TrajectoryRecord record;
    };

    // Struct-of-arrays copy of the walker states used by the lockstep loop.
    struct Lanes {
        std::vector<double> ar, ai, br, bi, survival, threshold;
        std::vector<unsigned char> jumped;

        void load(const std::vector<Walker>& ws) {
            const std::size_t n = ws.size();
            ar.resize(n), ai.resize(n), br.resize(n), bi.resize(n);
            survival.resize(n), threshold.resize(n), jumped.assign(n, 0);
            for (std::size_t i = 0; i < n; ++i) set(i, ws[i]);
        }
        void set(std::size_t i, const Walker& w) {
            ar[i] = w.psi(0).real();
            ai[i] = w.psi(0).imag();
            br[i] = w.psi(1).real();
            bi[i] = w.psi(1).imag();
            survival[i] = w.survival;
            threshold[i] = w.threshold;
        }
        Vector2c psi(std::size_t i) const { return {cplx(ar[i], ai[i]), cplx(br[i], bi[i])}; }
        void store(std::vector<Walker>& ws) const {
            for (std::size_t i = 0; i < ws.size(); ++i) {
                ws[i].psi = psi(i);
                ws[i].survival = survival[i];
            }
        }
    };

    // Survival-threshold sampling for all walkers at once, one step at a time.
    // Walkers are independent, so this only reorders work; each walker sees
    // exactly the same arithmetic as in advance().
    void advance_lockstep(std::vector<Walker>& walkers, Lanes& L, std::int64_t k0, std::int64_t k1,
                          const StepCoefficients* block, PopulationSums& pop) const {
        const std::size_t nw = walkers.size();
        double* __restrict ar = L.ar.data();
        double* __restrict ai = L.ai.data();
        double* __restrict br = L.br.data();
        double* __restrict bi = L.bi.data();
        double* __restrict surv = L.survival.data();
        const double* __restrict thr = L.threshold.data();
        unsigned char* __restrict jumped = L.jumped.data();
        for (std::int64_t k = k0; k < k1; ++k) {
            if (pop_stride_ > 0 && k % pop_stride_ == 0) {
                const auto idx = static_cast<std::size_t>(k / pop_stride_);
                for (std::size_t i = 0; i < nw; ++i) {
                    const double x = ar[i] * ar[i] + ai[i] * ai[i];
                    pop.sum[idx] += x;
                    pop.sum_sq[idx] += x * x;
                }
            }
            const StepCoefficients& c = block[k - k0];
            const double kee = c.k_ee, kgg = c.k_gg, kr = c.k_eg.real(), ki = c.k_eg.imag();
            const double m00r = c.m_ee.real(), m00i = c.m_ee.imag();
            const double m01r = c.m_eg.real(), m01i = c.m_eg.imag();
            const double m10r = c.m_ge.real(), m10i = c.m_ge.imag();
            const double m11r = c.m_gg.real(), m11i = c.m_gg.imag();
            unsigned char any = 0;
            for (std::size_t i = 0; i < nw; ++i) {
                const double a_r = ar[i], a_i = ai[i], b_r = br[i], b_i = bi[i];
                const double cr = a_r * b_r + a_i * b_i;
                const double ci = a_r * b_i - a_i * b_r;
                const double p = kee * (a_r * a_r + a_i * a_i) + kgg * (b_r * b_r + b_i * b_i) +
                                 2.0 * (kr * cr - ki * ci);
                const double s = surv[i] * (1.0 - p);
                const bool jump = s < thr[i];
                const double xr = m00r * a_r - m00i * a_i + m01r * b_r - m01i * b_i;
                const double xi = m00r * a_i + m00i * a_r + m01r * b_i + m01i * b_r;
                const double yr = m10r * a_r - m10i * a_i + m11r * b_r - m11i * b_i;
                const double yi = m10r * a_i + m10i * a_r + m11r * b_i + m11i * b_r;
                const double inv = 1.0 / std::sqrt(xr * xr + xi * xi + yr * yr + yi * yi);
                ar[i] = jump ? a_r : xr * inv;
                ai[i] = jump ? a_i : xi * inv;
                br[i] = jump ? b_r : yr * inv;
                bi[i] = jump ? b_i : yi * inv;
                surv[i] = jump ? surv[i] : s;
                jumped[i] = jump;
                any |= static_cast<unsigned char>(jump);
            }
            if (!any) continue;
            for (std::size_t i = 0; i < nw; ++i) {
                if (!jumped[i]) continue;
                Walker& w = walkers[i];
                w.psi = L.psi(i);
                perform_jump(w, k, 0.0);
                L.set(i, w);
            }
        }
    }

    void start(Walker& w, std::uint64_t index) const {
        const auto [u_meas, r0] = uniforms_.pair(index, 0, rng_stream::kStart);
        const Measurement m = initial_measurement(u_meas, cfg_);
        w.psi = m.state.amp;
        w.survival = 1.0;
        w.threshold = r0;
        w.jumps = 0;
        w.record = TrajectoryRecord{};
        w.record.index = index;
        w.record.order = order_;
        w.record.k_init = m.index;
        w.record.E_init = m.energy;
    }

    void observe(const Walker& w, std::int64_t k, PopulationSums& pop) const {
        if (pop_stride_ == 0 || k % pop_stride_ != 0) return;
        const auto i = static_cast<std::size_t>(k / pop_stride_);
        const double x = std::norm(w.psi(kExcited));
        pop.sum[i] += x;
        pop.sum_sq[i] += x * x;
    }

    void advance(Walker& w, std::int64_t k0, std::int64_t k1, const StepCoefficients* block,
                 PopulationSums& pop) const {
        // Plain real arithmetic: std::complex products carry NaN-recovery
        // branches that dominate the cost of this loop.
        double ar = w.psi(0).real(), ai = w.psi(0).imag();
        double br = w.psi(1).real(), bi = w.psi(1).imag();
        const bool per_step = opt_.sampling == JumpSampling::per_step;
        std::int64_t next_obs =
            pop_stride_ > 0 ? (k0 + pop_stride_ - 1) / pop_stride_ * pop_stride_ : k1;
        for (std::int64_t k = k0; k < k1; ++k) {
            if (k == next_obs) {
                w.psi = Vector2c(cplx(ar, ai), cplx(br, bi));
                observe(w, k, pop);
                next_obs += pop_stride_;
            }
            const StepCoefficients& c = block[k - k0];
            const double na2 = ar * ar + ai * ai;
            const double nb2 = br * br + bi * bi;
            // Re(conj(a) k_eg b)
            const double cr = ar * br + ai * bi;
            const double ci = ar * bi - ai * br;
            const double p = c.k_ee * na2 + c.k_gg * nb2 +
                             2.0 * (c.k_eg.real() * cr - c.k_eg.imag() * ci);
            bool jump = false;
            double u_channel = 0.0;
            if (per_step) {
                const auto [u, uc] = uniforms_.pair(w.record.index, static_cast<std::uint32_t>(k),
                                                    rng_stream::kStep);
                jump = u < p;
                u_channel = uc;
            } else {
                const double s = w.survival * (1.0 - p);
                if (s < w.threshold) {
                    jump = true;
                } else {
                    w.survival = s;
                }
            }
            if (jump) {
                w.psi = Vector2c(cplx(ar, ai), cplx(br, bi));
                perform_jump(w, k, u_channel);
                ar = w.psi(0).real();
                ai = w.psi(0).imag();
                br = w.psi(1).real();
                bi = w.psi(1).imag();
                continue;
            }
            const double xr = c.m_ee.real() * ar - c.m_ee.imag() * ai + c.m_eg.real() * br -
                              c.m_eg.imag() * bi;
            const double xi = c.m_ee.real() * ai + c.m_ee.imag() * ar + c.m_eg.real() * bi +
                              c.m_eg.imag() * br;
            const double yr = c.m_ge.real() * ar - c.m_ge.imag() * ai + c.m_gg.real() * br -
                              c.m_gg.imag() * bi;
            const double yi = c.m_ge.real() * ai + c.m_ge.imag() * ar + c.m_gg.real() * bi +
                              c.m_gg.imag() * br;
            const double inv = 1.0 / std::sqrt(xr * xr + xi * xi + yr * yr + yi * yi);
            ar = xr * inv;
            ai = xi * inv;
            br = yr * inv;
            bi = yi * inv;
        }
        w.psi = Vector2c(cplx(ar, ai), cplx(br, bi));
    }

    void perform_jump(Walker& w, std::int64_t k, double u_channel) const {
        const double t = cfg_.step_time(k);
        if (opt_.sampling == JumpSampling::survival_threshold) {
            const auto [uc, r] = uniforms_.pair(w.record.index, w.jumps, rng_stream::kJump);
            u_channel = uc;
            w.threshold = r;
            w.survival = 1.0;
        }
        ++w.jumps;

        const Frame f = frame_at(cfg_, t, order_);
        const RateSet rates = rates_at(f, cfg_);
        const auto p = detail::channel_probabilities(w.psi, f, rates, cfg_.dt());
        const double total = p[0] + p[1] + p[2];
        const double x = u_channel * total;
        int channel = 2;
        if (x < p[0]) channel = 0;
        else if (x < p[0] + p[1]) channel = 1;
        while (channel > 0 && p[static_cast<std::size_t>(channel)] <= 0.0) --channel;

        w.psi = detail::apply_collapse(w.psi, channel, rates);
        const RateSet rev = reversed_rates(rates);
        w.record.events.push_back({t, channel, f.omega01, rates.gamma(channel), rev.gamma(channel)});
    }

    void finish(Walker& w, PopulationSums& pop) const {
        observe(w, cfg_.n_steps, pop);
        const auto u = uniforms_.pair(w.record.index, 0, rng_stream::kFinal).first;
        QuantumState s;
        s.amp = w.psi;
        const Measurement m = final_measurement(u, s, cfg_.t_final(), cfg_);
        w.record.l_final = m.index;
        w.record.E_final = m.energy;
    }

    SystemConfig cfg_;
    int order_;
    EngineOptions opt_;
    KeyedUniforms uniforms_;
    std::int64_t pop_stride_ = 0;
    std::vector<StepCoefficients> table_;
};

/// Single trajectory of the configured dynamics order; identical to the record
/// the batched engine produces for the same index.
inline TrajectoryRecord run_trajectory(const SystemConfig& cfg, std::uint64_t traj_index,
                                       EngineOptions opt = {}) {
    opt.max_table_steps = 0;
    return TrajectoryEngine(cfg, cfg.n_order, opt).run_one(traj_index);
}

} // namespace qjwork
