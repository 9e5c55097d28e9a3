// Secular Lindblad equation in the diabatic representation
//
// The unitary part is driven by H_S itself; the order-n frame enters only via
// the Lindblad operators. bloch_crosscheck integrates the same dynamics in the
// rotated frame (component Bloch equations) and maps back through the frame
// kets.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qjwork/dissipation.hpp"
#include "qjwork/model.hpp"
#include "qjwork/renorm.hpp"

namespace qjwork {

using DensityMatrix = Matrix2c;

struct PopulationSeries {
    int order = 0;
    std::vector<double> t;
    std::vector<double> rho_ee;
    std::vector<std::string> warnings;
};

struct IntegrationOptions {
    std::int64_t steps_per_cycle = 100000;
    std::int64_t output_intervals = 300;
};

/// Thermal state exp(-beta H_S(t)) / Z built from the instantaneous eigenbasis.
inline DensityMatrix gibbs_state(const SystemConfig& cfg, double t) {
    const Frame f = frame1(cfg, t);
    // p_e / p_g = exp(-beta omega01)
    const double pe = 1.0 / (1.0 + std::exp(cfg.beta * f.omega01));
    return pe * f.projector_e() + (1.0 - pe) * f.projector_g();
}

inline DensityMatrix lindblad_rhs(const DensityMatrix& rho, double t, int n,
                                  const SystemConfig& cfg) {
    const Matrix2c h = hamiltonian_at(cfg, t);
    const RateSet rates = rates_at(frame_at(cfg, t, n), cfg);
    const cplx minus_i(0.0, -1.0);
    DensityMatrix d = minus_i * (h * rho - rho * h);
    for (int i = 0; i < 3; ++i) {
        const Matrix2c l = rates.jump_operator(i);
        const Matrix2c ldl = l.adjoint() * l;
        d += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
    }
    return d;
}

namespace detail {

inline std::int64_t total_steps(const SystemConfig& cfg, const IntegrationOptions& opt,
                                std::int64_t& stride) {
    const std::int64_t intervals = std::max<std::int64_t>(1, opt.output_intervals);
    std::int64_t steps = std::max<std::int64_t>(1, opt.steps_per_cycle) * cfg.n_cycles;
    stride = (steps + intervals - 1) / intervals;
    return stride * intervals;
}

inline std::vector<std::string> integration_warnings(const SystemConfig& cfg, double h) {
    std::vector<std::string> w;
    const double scale = std::max(cfg.omega0, std::hypot(cfg.omega0, 2.0 * cfg.lambda0));
    if (h * scale > 1e-2)
        w.push_back("master-equation step h*omega = " + std::to_string(h * scale) +
                    " exceeds 1e-2; populations may be inaccurate");
    return w;
}

} // namespace detail

/// Fixed-step classical RK4 from the Gibbs state over n_cycles drive periods.
/// Samples rho_ee on output_intervals + 1 equidistant times.
inline PopulationSeries integrate_populations(const SystemConfig& cfg, int n,
                                              const IntegrationOptions& opt = {}) {
    checked_order(n);
    std::int64_t stride = 1;
    const std::int64_t steps = detail::total_steps(cfg, opt, stride);
    const double h = cfg.t_final() / static_cast<double>(steps);

    PopulationSeries out;
    out.order = n;
    out.warnings = detail::integration_warnings(cfg, h);

    DensityMatrix rho = gibbs_state(cfg, 0.0);
    out.t.push_back(0.0);
    out.rho_ee.push_back(rho(kExcited, kExcited).real());
    for (std::int64_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        const DensityMatrix k1 = lindblad_rhs(rho, t, n, cfg);
        const DensityMatrix k2 = lindblad_rhs(rho + 0.5 * h * k1, t + 0.5 * h, n, cfg);
        const DensityMatrix k3 = lindblad_rhs(rho + 0.5 * h * k2, t + 0.5 * h, n, cfg);
        const DensityMatrix k4 = lindblad_rhs(rho + h * k3, t + h, n, cfg);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((k + 1) % stride == 0) {
            out.t.push_back(static_cast<double>(k + 1) * h);
            out.rho_ee.push_back(rho(kExcited, kExcited).real());
        }
    }
    return out;
}

namespace detail {

// Populations and coherence in the order-n frame: rho~_gg and rho~_ge.
struct BlochState {
    double gg;
    cplx ge;
};

inline BlochState bloch_rhs(const BlochState& s, double t, int n, const SystemConfig& cfg) {
    const Frame f = frame_at(cfg, t, n);
    const RateSet r = rates_at(f, cfg);
    const double g_eg = r.gamma_down;
    const double g_ge = r.gamma_up;
    const double g_phi = r.gamma_phi;
    const cplx i(0.0, 1.0);
    // diagonal rotation elements vanish under the adopted phase convention
    const double w_diag = 0.0;
    BlochState d;
    d.gg = -2.0 * std::imag(std::conj(f.w_ge) * s.ge) - (g_ge + g_eg) * s.gg + g_eg;
    d.ge = i * f.w_ge * (2.0 * s.gg - 1.0) + i * w_diag * s.ge + i * f.omega01 * s.ge -
           (0.5 * g_eg + 0.5 * g_ge + 2.0 * g_phi) * s.ge;
    return d;
}

inline double diabatic_rho_ee(const BlochState& s, const Frame& f) {
    const cplx e_of_e = f.ket_e(kExcited);
    const cplx e_of_g = f.ket_g(kExcited);
    const double ee = 1.0 - s.gg;
    return ee * std::norm(e_of_e) + s.gg * std::norm(e_of_g) +
           2.0 * std::real(e_of_g * s.ge * std::conj(e_of_e));
}

} // namespace detail

/// Integrates the rotated-frame Bloch equations with the same RK4 grid as
/// integrate_populations and returns the largest |rho_ee| discrepancy between
/// the two formulations over all grid times.
inline double bloch_crosscheck(const SystemConfig& cfg, int n,
                               std::int64_t steps_per_cycle = 100000) {
    if (checked_order(n) == 0)
        throw std::invalid_argument("bloch_crosscheck: H_S is not diagonal in the order-0 frame");
    IntegrationOptions opt;
    opt.steps_per_cycle = steps_per_cycle;
    opt.output_intervals = steps_per_cycle * cfg.n_cycles;
    const PopulationSeries reference = integrate_populations(cfg, n, opt);

    std::int64_t stride = 1;
    const std::int64_t steps = detail::total_steps(cfg, opt, stride);
    const double h = cfg.t_final() / static_cast<double>(steps);

    const DensityMatrix rho0 = gibbs_state(cfg, 0.0);
    Frame f = frame_at(cfg, 0.0, n);
    detail::BlochState s{(f.ket_g.adjoint() * rho0 * f.ket_g)(0, 0).real(),
                         (f.ket_g.adjoint() * rho0 * f.ket_e)(0, 0)};

    auto axpy = [](const detail::BlochState& x, double a, const detail::BlochState& y) {
        return detail::BlochState{x.gg + a * y.gg, x.ge + a * y.ge};
    };

    double max_dev = std::abs(detail::diabatic_rho_ee(s, f) - reference.rho_ee[0]);
    std::size_t sample = 1;
    for (std::int64_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        const auto k1 = detail::bloch_rhs(s, t, n, cfg);
        const auto k2 = detail::bloch_rhs(axpy(s, 0.5 * h, k1), t + 0.5 * h, n, cfg);
        const auto k3 = detail::bloch_rhs(axpy(s, 0.5 * h, k2), t + 0.5 * h, n, cfg);
        const auto k4 = detail::bloch_rhs(axpy(s, h, k3), t + h, n, cfg);
        s.gg += (h / 6.0) * (k1.gg + 2.0 * k2.gg + 2.0 * k3.gg + k4.gg);
        s.ge += (h / 6.0) * (k1.ge + 2.0 * k2.ge + 2.0 * k3.ge + k4.ge);
        if ((k + 1) % stride == 0) {
            f = frame_at(cfg, static_cast<double>(k + 1) * h, n);
            max_dev = std::max(max_dev,
                               std::abs(detail::diabatic_rho_ee(s, f) - reference.rho_ee[sample]));
            ++sample;
        }
    }
    return max_dev;
}

} // namespace qjwork
