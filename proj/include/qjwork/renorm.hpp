// Adiabatic renormalization frames for orders 0, 1 and 2
//
// A Frame bundles everything the dissipator and the jump engine need from the
// n-th order basis at one instant: level energies, the basis kets expressed in
// the diabatic (e, g) representation, the off-diagonal rotation element w_ge,
// the coupling matrix elements m1 = <g|Y|g>, m2 = <g|Y|e>, and the local
// (super)adiabatic parameter alpha = sqrt(2)|w_ge| / omega01.
//
// Phase convention: amplitudes of order 1 are real with C_ee, C_gg > 0; for the
// second rotation C_eg, C_gg are real and C_ee, C_ge imaginary. With this choice
// the rotation generators have vanishing diagonals, w_eg = -w_ge, and all kets
// are smooth functions of time (no sign flips when lambda or lambda_dot cross
// zero).

#pragma once

#include <cmath>
#include <vector>

#include "qjwork/model.hpp"

namespace qjwork {

struct Frame {
    int order = 0;
    double t = 0.0;
    double E_g = 0.0;
    double E_e = 0.0;
    double omega01 = 0.0;
    Vector2c ket_g;
    Vector2c ket_e;
    cplx w_ge{0.0};
    cplx m1{0.0};
    cplx m2{0.0};
    double alpha = 0.0;

    Matrix2c projector_e() const { return ket_e * ket_e.adjoint(); }
    Matrix2c projector_g() const { return ket_g * ket_g.adjoint(); }
};

/// Amplitudes of a two-level rotation: |e'> = C_ee|e> + C_eg|g>,
/// |g'> = C_ge|e> + C_gg|g>.
struct RotationAmplitudes {
    cplx ee, eg, ge, gg;
};

namespace detail {

// Real rotation diagonalizing (omega0/2) sigma_z + lambda sigma_x. Uses the
// half-angle form cos(theta/2) = sqrt((1 + omega0/eps)/2),
// sin(theta/2) = lambda / (eps cos(theta/2)), which is regular at lambda = 0.
inline RotationAmplitudes adiabatic_amplitudes(double omega0, double lambda, double eps) {
    const double c = std::sqrt(0.5 * (1.0 + omega0 / eps));
    const double s = lambda / (eps * c);
    return {cplx(c), cplx(s), cplx(-s), cplx(c)};
}

// Rotation diagonalizing [[eps/2, w_eg], [w_ge, -eps/2]] with w_ge = -i a.
inline RotationAmplitudes superadiabatic_amplitudes(double eps, double a, double E2) {
    const double c = std::sqrt(0.5 * (1.0 + 0.5 * eps / E2));
    const double s = a / (2.0 * E2 * c);
    return {cplx(0.0, c), cplx(s), cplx(0.0, -s), cplx(c)};
}

struct AdiabaticData {
    DriveSample drive;
    double eps;   // E_e^(1) - E_g^(1)
    RotationAmplitudes C;
    cplx w_ge;
};

inline AdiabaticData adiabatic_data(const SystemConfig& cfg, double t) {
    AdiabaticData d;
    d.drive = drive_at(cfg, t);
    d.eps = std::hypot(cfg.omega0, 2.0 * d.drive.lambda);
    d.C = adiabatic_amplitudes(cfg.omega0, d.drive.lambda, d.eps);
    const auto& C = d.C;
    d.w_ge = cplx(0.0, -d.drive.lambda_dot) *
             (C.ee * std::conj(C.gg) + C.eg * std::conj(C.ge)) / d.eps;
    return d;
}

} // namespace detail

/// Diabatic frame; independent of time.
inline Frame frame0(const SystemConfig& cfg) {
    Frame f;
    f.order = 0;
    f.E_e = 0.5 * cfg.omega0;
    f.E_g = -0.5 * cfg.omega0;
    f.omega01 = cfg.omega0;
    f.ket_e = diabatic_excited();
    f.ket_g = diabatic_ground();
    f.w_ge = 0.0;
    f.m1 = 0.0;
    f.m2 = cfg.g;
    f.alpha = 0.0;
    return f;
}

/// Instantaneous eigenbasis of H_S(t).
inline Frame frame1(const SystemConfig& cfg, double t) {
    const auto d = detail::adiabatic_data(cfg, t);
    const auto& C = d.C;
    const cplx g = cfg.g;

    Frame f;
    f.order = 1;
    f.t = t;
    f.E_e = 0.5 * d.eps;
    f.E_g = -0.5 * d.eps;
    f.omega01 = d.eps;
    f.ket_e = Vector2c(C.ee, C.eg);
    f.ket_g = Vector2c(C.ge, C.gg);
    f.w_ge = d.w_ge;
    f.m1 = 2.0 * std::real(g * std::conj(C.gg) * C.ge);
    f.m2 = g * std::conj(C.gg) * C.ee + std::conj(g) * std::conj(C.ge) * C.eg;
    f.alpha = std::numbers::sqrt2 * std::abs(f.w_ge) / f.omega01;
    return f;
}

/// First superadiabatic basis.
inline Frame frame2(const SystemConfig& cfg, double t) {
    const auto d = detail::adiabatic_data(cfg, t);
    const auto& C1 = d.C;
    const double lam = d.drive.lambda;
    const double lam_dot = d.drive.lambda_dot;
    const double lam_ddot = d.drive.lambda_ddot;
    const double w0 = cfg.omega0;
    const cplx g = cfg.g;

    const double a = -d.w_ge.imag();
    const double E2 = 0.5 * std::sqrt(d.eps * d.eps + 4.0 * std::norm(d.w_ge));
    const auto C2 = detail::superadiabatic_amplitudes(d.eps, a, E2);

    // Time derivatives of the first-order energies and rotation element, with
    // the common factor lambda cancelled so that lambda = 0 is regular.
    const double q = 4.0 * lam * lam + w0 * w0;
    const double E1e_dot = lam_dot * 2.0 * lam / std::sqrt(q);
    const double E1g_dot = -E1e_dot;
    const cplx w1_dot = cplx(0.0, -lam_ddot * w0 / q) +
                        cplx(0.0, lam_dot * lam_dot * 8.0 * w0 * lam / (q * q));

    Frame f;
    f.order = 2;
    f.t = t;
    f.E_e = E2;
    f.E_g = -E2;
    f.omega01 = 2.0 * E2;

    const Vector2c e1(C1.ee, C1.eg);
    const Vector2c g1(C1.ge, C1.gg);
    f.ket_e = C2.ee * e1 + C2.eg * g1;
    f.ket_g = C2.ge * e1 + C2.gg * g1;

    f.w_ge = cplx(0.0, -1.0) *
             (std::conj(C2.ge) * (C2.ee * E1e_dot - C2.eg * w1_dot) +
              std::conj(C2.gg) * (C2.eg * E1g_dot + C2.ee * w1_dot)) /
             (f.E_e - f.E_g);

    const cplx m1_1 = 2.0 * std::real(g * std::conj(C1.gg) * C1.ge);
    const cplx m2_1 = g * std::conj(C1.gg) * C1.ee + std::conj(g) * std::conj(C1.ge) * C1.eg;
    f.m1 = (std::norm(C2.gg) - std::norm(C2.ge)) * m1_1 +
           2.0 * std::real(C2.ge * std::conj(C2.gg) * m2_1);
    f.m2 = (std::conj(C2.gg) * C2.eg - std::conj(C2.ge) * C2.ee) * m1_1 +
           std::conj(C2.gg) * C2.ee * m2_1 + std::conj(C2.ge) * C2.eg * std::conj(m2_1);
    f.alpha = std::numbers::sqrt2 * std::abs(f.w_ge) / f.omega01;
    return f;
}

inline Frame frame_at(const SystemConfig& cfg, double t, int n) {
    switch (checked_order(n)) {
    case 0: {
        Frame f = frame0(cfg);
        f.t = t;
        return f;
    }
    case 1:
        return frame1(cfg, t);
    default:
        return frame2(cfg, t);
    }
}

struct AlphaSample {
    double t_over_Tdrive;
    double alpha1;
    double alpha2;
};

/// alpha_1 and alpha_2 on n_points equidistant times covering one drive cycle
/// (both endpoints included).
inline std::vector<AlphaSample> alpha_cycle(const SystemConfig& cfg, int n_points) {
    std::vector<AlphaSample> out;
    out.reserve(static_cast<std::size_t>(n_points));
    const double period = cfg.drive_period();
    for (int i = 0; i < n_points; ++i) {
        const double x = n_points > 1 ? static_cast<double>(i) / (n_points - 1) : 0.0;
        const double t = x * period;
        out.push_back({x, frame1(cfg, t).alpha, frame2(cfg, t).alpha});
    }
    return out;
}

} // namespace qjwork
