#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qjwork/model.hpp"
#include "qjwork/renorm.hpp"
#include "support.hpp"

using namespace qjwork;
using namespace qjwork::testing;

namespace {

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST(Drive, ValuesAtOrigin) {
    const auto cfg = default_config();
    const auto d = drive_at(cfg, 0.0);
    EXPECT_EQ(d.lambda, 0.0);
    EXPECT_DOUBLE_EQ(d.lambda_dot, 0.5 * 0.3);
    EXPECT_EQ(d.lambda_ddot, 0.0);
}

TEST(Drive, ValuesAtQuarterPeriod) {
    const auto cfg = default_config();
    const auto d = drive_at(cfg, cfg.drive_period() / 4);
    EXPECT_NEAR(d.lambda, 0.5, 1e-15);
    EXPECT_NEAR(d.lambda_dot, 0.0, 1e-15);
    EXPECT_NEAR(d.lambda_ddot, -0.5 * 0.09, 1e-15);
}

TEST(Drive, DerivativesMatchFiniteDifferences) {
    const auto cfg = default_config();
    auto lam = [&](double t) { return drive_at(cfg, t).lambda; };
    auto lam_dot = [&](double t) { return drive_at(cfg, t).lambda_dot; };
    {
        const double t = 0.7;
        EXPECT_NEAR(derivative(lam, t, 1e-3), drive_at(cfg, t).lambda_dot,
                    1e-8 * std::abs(drive_at(cfg, t).lambda_dot));
        EXPECT_NEAR(derivative(lam_dot, t, 1e-3), drive_at(cfg, t).lambda_ddot,
                    1e-8 * std::abs(drive_at(cfg, t).lambda_ddot));
    }
    const double scale_dot = cfg.lambda0 * cfg.omega_d;
    const double scale_ddot = scale_dot * cfg.omega_d;
    for (int i = 0; i < 1000; ++i) {
        const double t = random_time(cfg);
        const auto d = drive_at(cfg, t);
        // central step 1e-6 as a plain two-point difference
        const double fd1 = (lam(t + 1e-6) - lam(t - 1e-6)) / 2e-6;
        const double fd2 = (lam_dot(t + 1e-6) - lam_dot(t - 1e-6)) / 2e-6;
        EXPECT_NEAR(fd1, d.lambda_dot, 1e-6 * scale_dot);
        EXPECT_NEAR(fd2, d.lambda_ddot, 1e-6 * scale_ddot);
    }
}

TEST(Drive, PeriodicOverThreeCycles) {
    const auto cfg = default_config();
    for (int k = 0; k <= 3; ++k) EXPECT_NEAR(drive_at(cfg, k * cfg.drive_period()).lambda, 0.0, 1e-15);
    for (int i = 0; i < 200; ++i) {
        const double t = uniform(0.0, 2.0 * cfg.drive_period());
        EXPECT_NEAR(drive_at(cfg, t + cfg.drive_period()).lambda, drive_at(cfg, t).lambda, 1e-14);
    }
}

TEST(Hamiltonian, HermitianTracelessAndPeak) {
    const auto cfg = default_config();
    const Matrix2c h0 = hamiltonian_at(cfg, 0.0);
    EXPECT_EQ(h0(0, 0), cplx(0.5));
    EXPECT_EQ(h0(1, 1), cplx(-0.5));
    EXPECT_EQ(h0(0, 1), cplx(0.0));
    for (int i = 0; i < 200; ++i) {
        const Matrix2c h = hamiltonian_at(cfg, random_time(cfg));
        EXPECT_LT((h - h.adjoint()).norm(), 1e-15);
        EXPECT_LT(std::abs(h.trace()), 1e-15);
    }
    EXPECT_NEAR(hamiltonian_at(cfg, cfg.drive_period() / 4)(0, 1).real(), 0.5, 1e-15);
}

TEST(Config, ValidationNamesField) {
    SystemConfig c;
    c.beta = -1.0;
    try {
        c.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
    }
    c = SystemConfig{};
    c.n_order = 3;
    EXPECT_THROW(c.validate(), UnsupportedOrder);
    c = SystemConfig{};
    c.n_steps = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(SystemConfig{}.validate());
}

TEST(Config, CoarseStepWarns) {
    SystemConfig c;
    c.n_steps = 1000;
    EXPECT_FALSE(c.warnings().empty());
    c.n_steps = 100000;
    EXPECT_TRUE(c.warnings().empty());
}

// ---------------------------------------------------------------------------

TEST(Frame0, Diabatic) {
    const auto cfg = default_config();
    const Frame f = frame0(cfg);
    EXPECT_EQ(f.omega01, 1.0);
    EXPECT_EQ(f.E_e, 0.5);
    EXPECT_EQ(f.E_g, -0.5);
    EXPECT_EQ(f.ket_e, diabatic_excited());
    EXPECT_EQ(f.ket_g, diabatic_ground());
    EXPECT_EQ(f.w_ge, cplx(0.0));
    EXPECT_EQ(f.m1, cplx(0.0));
    EXPECT_EQ(f.m2, cfg.g);
    EXPECT_EQ(f.alpha, 0.0);
}

TEST(Frame1, AtOrigin) {
    const auto cfg = default_config();
    const Frame f = frame1(cfg, 0.0);
    EXPECT_DOUBLE_EQ(f.E_e, 0.5);
    EXPECT_DOUBLE_EQ(f.E_g, -0.5);
    EXPECT_LT((f.ket_e - diabatic_excited()).norm(), 1e-15);
    EXPECT_LT((f.ket_g - diabatic_ground()).norm(), 1e-15);
    EXPECT_NEAR(f.w_ge.real(), 0.0, 1e-15);
    EXPECT_NEAR(f.w_ge.imag(), -0.15, 1e-15);

    auto frame = [&](double s) { return numeric_frame1(cfg, s); };
    const cplx oracle = numeric_generator(cfg, frame, 0.0, 1e-3)(1, 0);
    EXPECT_LT(rel_err(f.w_ge, oracle), 1e-6);
}

TEST(Frame1, AtQuarterPeriod) {
    const auto cfg = default_config();
    const double t = cfg.drive_period() / 4;
    const Frame f = frame1(cfg, t);
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(hamiltonian_at(cfg, t));
    EXPECT_NEAR(f.E_e, es.eigenvalues()(1), 1e-14);
    EXPECT_NEAR(f.E_g, es.eigenvalues()(0), 1e-14);
    EXPECT_NEAR(f.E_e, std::numbers::sqrt2 / 2, 1e-14);
    EXPECT_LT(std::abs(f.w_ge), 1e-15);
}

TEST(Frame1, DiagonalizesHamiltonian) {
    const auto cfg = default_config();
    for (int i = 0; i < 100; ++i) {
        const double t = random_time(cfg);
        const Frame f = frame1(cfg, t);
        Matrix2c d;
        d.col(0) = f.ket_e;
        d.col(1) = f.ket_g;
        const Matrix2c hd = d.adjoint() * hamiltonian_at(cfg, t) * d;
        EXPECT_LT(std::abs(hd(0, 1)), 1e-12);
        EXPECT_LT(std::abs(hd(1, 0)), 1e-12);
        EXPECT_NEAR(hd(0, 0).real(), f.E_e, 1e-12);
        EXPECT_NEAR(hd(1, 1).real(), f.E_g, 1e-12);
    }
}

TEST(Frame2, DiagonalizesFirstFrameGenerator) {
    const auto cfg = default_config();
    for (int i = 0; i < 100; ++i) {
        const double t = random_time(cfg);
        const Frame f1 = frame1(cfg, t);
        const Frame f2 = frame2(cfg, t);
        const Matrix2c gen = numeric_frame1_generator(cfg, t, 1e-3);
        // D2 columns: order-2 kets expressed in the order-1 basis
        Matrix2c d1, d2;
        d1.col(0) = f1.ket_e;
        d1.col(1) = f1.ket_g;
        d2.col(0) = d1.adjoint() * f2.ket_e;
        d2.col(1) = d1.adjoint() * f2.ket_g;
        const Matrix2c hd = d2.adjoint() * gen * d2;
        EXPECT_LT(std::abs(hd(0, 1)), 1e-10) << "t=" << t;
        EXPECT_LT(std::abs(hd(1, 0)), 1e-10) << "t=" << t;
        EXPECT_NEAR(hd(0, 0).real(), f2.E_e, 1e-10);
        EXPECT_NEAR(hd(1, 1).real(), f2.E_g, 1e-10);
    }
}

TEST(Frame2, StaticDriveCoincidesWithFrame1) {
    // quasi-static drive: at the peak lambda_dot = 0 and lambda_ddot ~ omega_d^2 is negligible
    SystemConfig cfg;
    cfg.omega_d = 1e-9;
    const double t = cfg.drive_period() / 4;
    const Frame f1 = frame1(cfg, t);
    const Frame f2 = frame2(cfg, t);
    EXPECT_LT(std::abs(f2.w_ge), 1e-15);
    EXPECT_NEAR(f2.omega01, f1.omega01, 1e-15);
    // equal up to a global phase per ket
    EXPECT_NEAR(std::abs(f1.ket_e.dot(f2.ket_e)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(f1.ket_g.dot(f2.ket_g)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(f2.m2), std::abs(f1.m2), 1e-15);
    EXPECT_NEAR(std::abs(f2.m1), std::abs(f1.m1), 1e-15);
}

TEST(Frames, OrthonormalAndComplete) {
    const auto cfg = default_config();
    for (int n = 0; n <= 2; ++n) {
        for (int i = 0; i < 200; ++i) {
            const Frame f = frame_at(cfg, random_time(cfg), n);
            EXPECT_NEAR(f.ket_g.squaredNorm(), 1.0, 1e-12);
            EXPECT_NEAR(f.ket_e.squaredNorm(), 1.0, 1e-12);
            EXPECT_LT(std::abs(f.ket_g.dot(f.ket_e)), 1e-12);
            EXPECT_LT((f.projector_e() + f.projector_g() - Matrix2c::Identity()).norm(), 1e-12);
            EXPECT_GE(f.E_e, f.E_g);
            EXPECT_NEAR(f.omega01, f.E_e - f.E_g, 1e-14);
        }
    }
}

TEST(Frames, RotationElementMatchesFiniteDifferenceOracle) {
    const auto cfg = default_config();
    auto num1 = [&](double s) { return numeric_frame1(cfg, s); };
    auto num2 = [&](double s) { return numeric_frame2(cfg, s, 1e-3); };
    // w2 has zeros inside the cycle, so its error is measured against its peak
    double scale2 = 0.0;
    for (int i = 0; i <= 2000; ++i)
        scale2 = std::max(scale2, std::abs(frame2(cfg, cfg.drive_period() * i / 2000).w_ge));
    double worst1 = 0.0, worst2 = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t = random_time(cfg);
        worst1 = std::max(worst1, rel_err(frame1(cfg, t).w_ge, numeric_generator(cfg, num1, t, 1e-3)(1, 0)));
        if (i < 250)
            worst2 = std::max(worst2, std::abs(frame2(cfg, t).w_ge -
                                               numeric_generator(cfg, num2, t, 5e-3)(1, 0)) / scale2);
    }
    EXPECT_LT(worst1, 1e-6);
    EXPECT_LT(worst2, 1e-6);
}

TEST(Frames, GeneratorInOwnBasis) {
    const auto cfg = default_config();
    for (int n = 1; n <= 2; ++n) {
        auto kets = [&](double s) {
            const Frame f = frame_at(cfg, s, n);
            return std::pair<Vector2c, Vector2c>(f.ket_e, f.ket_g);
        };
        for (int i = 0; i < 300; ++i) {
            const double t = random_time(cfg);
            const Frame f = frame_at(cfg, t, n);
            const Matrix2c gen = numeric_generator(cfg, kets, t, 1e-3);
            EXPECT_NEAR(std::abs(gen(0, 0) - f.E_e), 0.0, 1e-8) << "n=" << n;
            EXPECT_NEAR(std::abs(gen(1, 1) - f.E_g), 0.0, 1e-8) << "n=" << n;
            EXPECT_LT(std::abs(gen(1, 0) - f.w_ge), 1e-8) << "n=" << n;
            EXPECT_LT(std::abs(gen(0, 1) - std::conj(f.w_ge)), 1e-8) << "n=" << n;
        }
    }
}

TEST(Frames, CouplingMatrixElements) {
    const auto cfg = [] {
        SystemConfig c;
        c.g = cplx(0.11, -0.07);
        return c;
    }();
    const Matrix2c y = coupling_operator(cfg);
    for (int n = 0; n <= 2; ++n) {
        for (int i = 0; i < 100; ++i) {
            const Frame f = frame_at(cfg, random_time(cfg), n);
            EXPECT_LT(std::abs(f.m1 - f.ket_g.dot(y * f.ket_g)), 1e-14);
            EXPECT_LT(std::abs(f.m2 - f.ket_g.dot(y * f.ket_e)), 1e-14);
        }
    }
}

TEST(Frames, ContinuousThroughDriveZeros) {
    const auto cfg = default_config();
    const double dt = cfg.drive_period() / 1e5;
    for (int n = 1; n <= 2; ++n) {
        double worst = 0.0;
        Frame prev = frame_at(cfg, 0.0, n);
        for (int k = 1; k <= 300000; k += 7) {
            const Frame f = frame_at(cfg, k * dt, n);
            const double step = 7 * dt;
            worst = std::max(worst, ((f.ket_e - prev.ket_e).norm() + (f.ket_g - prev.ket_g).norm()) / step);
            prev = f;
        }
        // ket speed is bounded by the rotation rate |w| ~ 0.15, no jumps of O(1)
        EXPECT_LT(worst, 1.0) << "order " << n;
    }
}

TEST(Frames, AlphaEqualsNormOverGap) {
    const auto cfg = default_config();
    for (int n = 1; n <= 2; ++n) {
        for (int i = 0; i < 100; ++i) {
            const Frame f = frame_at(cfg, random_time(cfg), n);
            // Hilbert-Schmidt norm of [[0, w_eg], [w_ge, 0]] with w_eg = -w_ge
            const double hs = std::sqrt(2.0 * std::norm(f.w_ge));
            EXPECT_NEAR(f.alpha, hs / f.omega01, 1e-15);
        }
    }
}

TEST(Frames, AlphaMaximaOverCycle) {
    const auto cfg = default_config();
    double max1 = 0.0, max2 = 0.0;
    for (const auto& s : alpha_cycle(cfg, 2001)) {
        max1 = std::max(max1, s.alpha1);
        max2 = std::max(max2, s.alpha2);
    }
    EXPECT_LT(max2, max1);
    EXPECT_NEAR(max1, std::numbers::sqrt2 * 0.15, 1e-12);
}

TEST(Frames, DispatchAndUnsupportedOrder) {
    const auto cfg = default_config();
    EXPECT_EQ(frame_at(cfg, 1.3, 0).m2, frame0(cfg).m2);
    EXPECT_EQ(frame_at(cfg, 0.0, 1).w_ge, frame1(cfg, 0.0).w_ge);
    EXPECT_THROW(frame_at(cfg, 0.0, 3), UnsupportedOrder);
    EXPECT_THROW(frame_at(cfg, 0.0, -1), UnsupportedOrder);
}
