// Ohmic noise spectrum, drive-dressed rates, jump operators

#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "qjwork/model.hpp"
#include "qjwork/renorm.hpp"

namespace qjwork {

/// Ohmic spectrum S(w) = 2 mu w / (1 - exp(-beta w)); S(0) is replaced by the
/// flat dephasing value 2 mu T0.
inline double spectral_density(double omega, const SystemConfig& cfg) {
    if (omega == 0.0) return 2.0 * cfg.mu * cfg.T0;
    return 2.0 * cfg.mu * omega / -std::expm1(-cfg.beta * omega);
}

enum Channel : int { kDecay = 0, kExcitation = 1, kDephasing = 2 };

/// Rates of the three channels and their unit jump operators A_i, so that
/// L_i = sqrt(Gamma_i) A_i. Matrices are in the diabatic (e, g) representation.
struct RateSet {
    double gamma_down = 0.0;  // Gamma_(n,0)
    double gamma_up = 0.0;    // Gamma_(n,1)
    double gamma_phi = 0.0;   // Gamma_(n,2)
    std::array<Matrix2c, 3> unit_ops{Matrix2c::Zero(), Matrix2c::Zero(), Matrix2c::Zero()};

    double gamma(int channel) const {
        switch (channel) {
        case kDecay: return gamma_down;
        case kExcitation: return gamma_up;
        default: return gamma_phi;
        }
    }

    Matrix2c jump_operator(int channel) const {
        return std::sqrt(gamma(channel)) * unit_ops[static_cast<std::size_t>(channel)];
    }

    /// sum_i L_i^dagger L_i
    Matrix2c decay_sum() const {
        Matrix2c k = Matrix2c::Zero();
        for (int i = 0; i < 3; ++i) {
            const Matrix2c l = jump_operator(i);
            k += l.adjoint() * l;
        }
        return k;
    }
};

inline RateSet rates_at(const Frame& frame, const SystemConfig& cfg) {
    RateSet r;
    const double m2sq = std::norm(frame.m2);
    r.gamma_down = spectral_density(frame.omega01, cfg) * m2sq;
    r.gamma_up = spectral_density(-frame.omega01, cfg) * m2sq;
    r.gamma_phi = spectral_density(0.0, cfg) * std::norm(frame.m1);
    r.unit_ops[kDecay] = frame.ket_g * frame.ket_e.adjoint();
    r.unit_ops[kExcitation] = frame.ket_e * frame.ket_g.adjoint();
    r.unit_ops[kDephasing] = frame.projector_e() - frame.projector_g();
    return r;
}

/// Rates of the time-reversed process: emission and absorption are exchanged
/// and each unit operator is replaced by its adjoint.
inline RateSet reversed_rates(const RateSet& r) {
    RateSet out;
    out.gamma_down = r.gamma_up;
    out.gamma_up = r.gamma_down;
    out.gamma_phi = r.gamma_phi;
    for (std::size_t i = 0; i < 3; ++i) out.unit_ops[i] = r.unit_ops[i].adjoint();
    return out;
}

} // namespace qjwork
