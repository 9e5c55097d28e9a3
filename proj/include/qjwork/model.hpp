// Physical parameters, unit conventions and the drive protocol
//
// Natural units: hbar = k_B = 1. Energies are measured in units of hbar*omega0
// and times in units of 1/omega0 when omega0 = 1 (the default).
//
// Basis convention used by every matrix and vector in this library: the fixed
// diabatic basis ordered (e, g), i.e. index 0 is the excited state |e> and
// index 1 the ground state |g> of the undriven Hamiltonian.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qjwork {

using cplx = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;

inline constexpr int kExcited = 0;
inline constexpr int kGround = 1;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedOrder : public std::invalid_argument {
public:
    explicit UnsupportedOrder(int order)
        : std::invalid_argument("unsupported renormalization order " + std::to_string(order) +
                                " (supported: 0, 1, 2)"),
          order_(order) {}
    int order() const noexcept { return order_; }

private:
    int order_;
};

inline int checked_order(int order) {
    if (order < 0 || order > 2) throw UnsupportedOrder(order);
    return order;
}

struct SystemConfig {
    double omega0 = 1.0;                              // resonance angular frequency
    double lambda0 = 0.5;                             // drive amplitude
    double omega_d = 0.3;                             // drive angular frequency
    cplx g{1.0 / (5.0 * std::numbers::sqrt2), 0.0};   // coupling strength
    double mu = 1.0;                                  // damping constant, 1/(hbar omega0^2)
    double beta = 2.0;                                // inverse bath temperature
    double T0 = 1.0;                                  // dephasing temperature (2T)
    int n_cycles = 3;
    int n_order = 2;
    std::int64_t n_steps = 100000;
    std::int64_t n_traj = 100000;
    std::uint64_t seed = 12345;

    double drive_period() const { return 2.0 * std::numbers::pi / omega_d; }
    double t_init() const { return 0.0; }
    double t_final() const { return n_cycles * drive_period(); }
    double dt() const { return t_final() / static_cast<double>(n_steps); }
    double step_time(std::int64_t k) const { return static_cast<double>(k) * dt(); }

    /// Throws ConfigError naming the first offending field.
    void validate() const {
        auto require = [](bool ok, const char* field, const char* what) {
            if (!ok) throw ConfigError(std::string(field) + ": " + what);
        };
        require(std::isfinite(omega0) && omega0 > 0, "omega0", "must be finite and > 0");
        require(std::isfinite(omega_d) && omega_d > 0, "omega_d", "must be finite and > 0");
        require(std::isfinite(lambda0), "lambda0", "must be finite");
        require(std::isfinite(g.real()) && std::isfinite(g.imag()), "g", "must be finite");
        require(std::isfinite(mu) && mu >= 0, "mu", "must be finite and >= 0");
        require(beta > 0 && !std::isnan(beta), "beta", "must be > 0");
        require(std::isfinite(T0) && T0 >= 0, "T0", "must be finite and >= 0");
        require(n_cycles >= 1, "n_cycles", "must be >= 1");
        require(n_steps >= 1, "n_steps", "must be >= 1");
        require(n_traj >= 1, "n_traj", "must be >= 1");
        checked_order(n_order);
    }

    /// Non-fatal accuracy diagnostics.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (dt() * omega0 >= 1e-2)
            out.push_back("time step dt*omega0 = " + std::to_string(dt() * omega0) +
                          " exceeds 1e-2; first-order jump propagation is inaccurate");
        return out;
    }
};

/// lambda(t) and its first two time derivatives.
struct DriveSample {
    double lambda;
    double lambda_dot;
    double lambda_ddot;
};

inline DriveSample drive_at(const SystemConfig& cfg, double t) {
    const double phase = cfg.omega_d * t;
    const double s = std::sin(phase);
    const double c = std::cos(phase);
    return {cfg.lambda0 * s, cfg.lambda0 * cfg.omega_d * c,
            -cfg.lambda0 * cfg.omega_d * cfg.omega_d * s};
}

/// H_S = (omega0/2) sigma_z + lambda (sigma_+ + sigma_-), ordered (e, g).
inline Matrix2c hamiltonian_at(const SystemConfig& cfg, double t) {
    const double lam = drive_at(cfg, t).lambda;
    Matrix2c h;
    h << cplx(0.5 * cfg.omega0, 0.0), cplx(lam, 0.0),
         cplx(lam, 0.0), cplx(-0.5 * cfg.omega0, 0.0);
    return h;
}

/// System part of the coupling, Y = g* sigma_+ + g sigma_-.
inline Matrix2c coupling_operator(const SystemConfig& cfg) {
    Matrix2c y;
    y << cplx(0.0), std::conj(cfg.g),
         cfg.g, cplx(0.0);
    return y;
}

inline Vector2c diabatic_excited() { return Vector2c(cplx(1.0), cplx(0.0)); }
inline Vector2c diabatic_ground() { return Vector2c(cplx(0.0), cplx(1.0)); }

} // namespace qjwork
