#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <type_traits>
#include <utility>

#include <Eigen/Dense>

#include "qjwork/model.hpp"
#include "qjwork/renorm.hpp"

namespace qjwork::testing {

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline SystemConfig default_config() { return SystemConfig{}; }

/// Random time in the three-cycle window.
inline double random_time(const SystemConfig& cfg) { return uniform(0.0, cfg.t_final()); }

/// Five-point central difference of f at t.
template <class F>
auto derivative(F&& f, double t, double h) {
    // concrete type so Eigen expressions do not outlive their operands
    using R = std::decay_t<decltype(f(t))>;
    return R((-f(t + 2 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2 * h)) / (12.0 * h));
}

/// Rotates v by a global phase so that component `idx` becomes phase * |v_idx|.
inline Vector2c fix_phase(Vector2c v, int idx, cplx phase) {
    const cplx c = v(idx);
    if (std::abs(c) > 0.0) v *= phase * std::abs(c) / c;
    return v;
}

/// Numeric instantaneous eigenbasis of H_S(t): (ket_e, ket_g) with the
/// diagonal diabatic components made real positive.
inline std::pair<Vector2c, Vector2c> numeric_frame1(const SystemConfig& cfg, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(hamiltonian_at(cfg, t));
    Vector2c g = es.eigenvectors().col(0);
    Vector2c e = es.eigenvectors().col(1);
    return {fix_phase(e, kExcited, 1.0), fix_phase(g, kGround, 1.0)};
}

/// Generator of the dynamics in a moving basis D = (ket_e, ket_g):
/// D^dagger H_S D - i D^dagger dD/dt, with dD/dt from finite differences.
/// Its diagonal holds the frame energies and its (g, e) entry is w_ge.
template <class KetFn>
Matrix2c numeric_generator(const SystemConfig& cfg, KetFn&& ket_pair, double t, double h) {
    auto basis = [&](double s) -> Matrix2c {
        const auto [e, g] = ket_pair(s);
        Matrix2c d;
        d.col(0) = e;
        d.col(1) = g;
        return d;
    };
    const Matrix2c d = basis(t);
    const Matrix2c dd = derivative(basis, t, h);
    return d.adjoint() * hamiltonian_at(cfg, t) * d - cplx(0.0, 1.0) * d.adjoint() * dd;
}

inline Matrix2c numeric_frame1_generator(const SystemConfig& cfg, double t, double h) {
    return numeric_generator(cfg, [&](double s) { return numeric_frame1(cfg, s); }, t, h);
}

/// Numeric superadiabatic basis: diagonalize the first-frame generator and map
/// back to the diabatic representation. Phases: <e1|e2> in i*R+, <g1|g2> in R+.
inline std::pair<Vector2c, Vector2c> numeric_frame2(const SystemConfig& cfg, double t, double h) {
    const Matrix2c m = numeric_frame1_generator(cfg, t, h);
    const Matrix2c herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(herm);
    const Vector2c vg = fix_phase(es.eigenvectors().col(0), 1, 1.0);
    const Vector2c ve = fix_phase(es.eigenvectors().col(1), 0, cplx(0.0, 1.0));
    const auto [e1, g1] = numeric_frame1(cfg, t);
    return {ve(0) * e1 + ve(1) * g1, vg(0) * e1 + vg(1) * g1};
}

} // namespace qjwork::testing
