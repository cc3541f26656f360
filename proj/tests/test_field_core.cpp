#include "imk/errors.hpp"
#include "imk/fourier.hpp"
#include "imk/norms.hpp"
#include "imk/snapshot.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace imk;

namespace {

const double kPi = std::numbers::pi;

Field plane_wave(const Grid& g, const std::vector<int>& modes) {
    // real part cos(k.x), imaginary part sin(k.x)
    Eigen::ArrayXd phase = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(g.size()));
    for (int a = 0; a < g.spatial_dim(); ++a)
        phase += 2.0 * kPi * modes[a] / g.lengths[a] * g.coordinate_array(a);
    return Field(g, phase.cos(), phase.sin());
}

double wavenumber2(const Grid& g, const std::vector<int>& modes) {
    double k2 = 0.0;
    for (int a = 0; a < g.spatial_dim(); ++a) k2 += std::pow(2.0 * kPi * modes[a] / g.lengths[a], 2);
    return k2;
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
    EXPECT_THROW(Grid({6}, {1.0}), ShapeError);
    EXPECT_THROW(Grid({9}, {1.0}), ShapeError);
    EXPECT_THROW(Grid({16}, {-1.0}), ShapeError);
    EXPECT_THROW(Grid({16, 16}, {1.0}), ShapeError);
    EXPECT_NO_THROW(Grid({16, 8}, {3.0, 2.0}));
}

TEST(Multiplier, IdentityAndZeroMode) {
    Grid g({32}, {10.0});
    std::mt19937_64 rng(1);
    Field f = test::random_smooth_field(g, rng);
    Field same = apply_multiplier(f, [](const Wavevector&) { return 1.0; });
    EXPECT_LT(test::max_abs_diff(f, same), 1e-12);

    Field c = Field::constant(g, 0.7, -0.2);
    Field cc = apply_multiplier(c, [](const Wavevector& w) { return std::exp(-w.norm2()); });
    EXPECT_LT(test::max_abs_diff(c, cc), 1e-14);
}

TEST(Multiplier, LaplacianSymbolOnPlaneWave) {
    Grid g({16, 12}, {5.0, 7.0});
    const std::vector<int> m{3, -2};
    Field e = plane_wave(g, m);
    Field out = apply_multiplier(e, [](const Wavevector& w) { return w.norm2(); });
    EXPECT_LT(test::max_abs_diff(out, e * wavenumber2(g, m)), 1e-11);
}

TEST(Multiplier, RejectsNonFiniteSymbol) {
    Grid g({16}, {1.0});
    Field f = Field::constant(g, 1.0);
    EXPECT_THROW(apply_multiplier(f, [](const Wavevector& w) { return 1.0 / w.norm2(); }), ParameterError);
}

TEST(Translate, PlaneWavePhase) {
    Grid g({16, 8}, {6.0, 4.0});
    const std::vector<int> m{2, 1};
    Field e = plane_wave(g, m);
    Eigen::VectorXd y(2);
    y << 0.37, -1.21;
    const double ky = 2 * kPi * m[0] / g.lengths[0] * y[0] + 2 * kPi * m[1] / g.lengths[1] * y[1];
    // e^{ik.y} e^{ik.x}: cos(kx + ky) + i sin(kx + ky)
    Field expect(g, e.re * std::cos(ky) - e.im * std::sin(ky), e.im * std::cos(ky) + e.re * std::sin(ky));
    EXPECT_LT(test::max_abs_diff(translate(e, y), expect), 1e-12);
}

TEST(Translate, GroupInverseAndZero) {
    Grid g({64}, {20.0});
    std::mt19937_64 rng(2);
    Field f = test::random_smooth_field(g, rng);
    Eigen::VectorXd y(1);
    y << 1.2345;
    EXPECT_LT(test::max_abs_diff(translate(translate(f, y), -y), f), 1e-12);
    EXPECT_LT(test::max_abs_diff(translate(f, Eigen::VectorXd::Zero(1)), f), 0.0 + 1e-300);
}

TEST(Translate, LatticeShiftIsExact) {
    Grid g({16}, {8.0});
    std::mt19937_64 rng(3);
    Field f = test::random_smooth_field(g, rng, 1.0, 1.0);
    Eigen::VectorXd y(1);
    y << 3 * g.spacing(0);
    Field t = translate(f, y);
    for (int i = 0; i < 16; ++i) EXPECT_NEAR(t.re[i], f.re[(i + 3) % 16], 1e-12);
}

TEST(Norms, ZeroFieldVanishes) {
    Grid g({16, 8}, {4.0, 3.0});
    Field z(g);
    for (auto k : {NormKind::x1(), NormKind::l2(), NormKind::lp(3.0), NormKind::lp(INFINITY), NormKind::w1p(1.5),
                   NormKind::besov(2.0, 1.0), NormKind::qweighted(4.0)})
        EXPECT_EQ(norm(z, k), 0.0);
}

TEST(Norms, X1OfSingleModeInImaginaryPart) {
    Grid g({32}, {9.0});
    const double k = 2 * kPi * 3 / 9.0;
    Field f(g);
    f.im = std::sqrt(2.0) * (k * g.coordinate_array(0)).cos();
    EXPECT_NEAR(norm(f, NormKind::x1()), k * std::sqrt(g.volume()), 1e-11);
}

TEST(Norms, RejectsBadExponent) {
    Grid g({16}, {4.0});
    Field f = Field::constant(g, 1.0);
    EXPECT_THROW(norm(f, NormKind::lp(0.5)), ParameterError);
}

TEST(Norms, QWeightedMatchesFormula) {
    Vec y(1), a1(2), a2(1), ap(1);
    y << -0.3;
    a1 << 0.1, 0.2;
    a2 << 0.01;
    ap << 0.05;
    const double Q = 4.0, vx = 0.002;
    EXPECT_NEAR(q_norm(y, a1, a2, ap, vx, Q), 0.3 + Q * std::hypot(0.1, 0.2) + Q * Q * Q * 0.01 + 0.05 + Q * Q * vx,
                1e-15);
}

TEST(Norms, ParsevalConsistency) {
    Grid g({24, 16}, {7.0, 5.0});
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        Field f = test::random_smooth_field(g, rng, 1.0, 1.0);
        const double phys = norm(f, NormKind::l2());
        EXPECT_NEAR(l2_norm_spectral(f), phys, 1e-10 * phys);
    }
}

TEST(Norms, TranslationIsometry) {
    Grid g({32, 16}, {10.0, 6.0});
    std::mt19937_64 rng(5);
    Field f = test::random_smooth_field(g, rng);
    Eigen::VectorXd y(2);
    y << 0.731, -2.2;
    Field t = translate(f, y);
    // band-limited fields: all norms below are translation invariant up to quadrature
    for (auto k : {NormKind::x1(), NormKind::l2(), NormKind::besov(2.0, 1.0), NormKind::qweighted(3.0)}) {
        const double a = norm(f, k), b = norm(t, k);
        EXPECT_NEAR(a, b, 1e-10 * a);
    }
}

TEST(Norms, LittlewoodPaleyPartition) {
    Grid g({64}, {30.0});
    std::mt19937_64 rng(6);
    Field f = test::random_smooth_field(g, rng, 1.0, 1.0);
    double total = 0.0;
    for (const auto& b : littlewood_paley(g, f.re, false)) total += (b.part.square()).sum() * g.cell_volume();
    const double l2 = (f.re.square()).sum() * g.cell_volume();
    EXPECT_NEAR(total, l2, 1e-10 * l2);
}

TEST(Multiplier, CommutesWithTranslate) {
    Grid g({32, 8}, {12.0, 5.0});
    std::mt19937_64 rng(7);
    Field f = test::random_smooth_field(g, rng);
    Eigen::VectorXd y(2);
    y << 0.4, 1.9;
    auto sym = [](const Wavevector& w) { return 1.0 / (1.0 + w.norm2()); };
    EXPECT_LT(test::max_abs_diff(apply_multiplier(translate(f, y), sym), translate(apply_multiplier(f, sym), y)),
              1e-10);
}

TEST(SpacetimeNorm, Basics) {
    Grid g({16}, {6.0});
    std::vector<Field> zeros(5, Field(g));
    EXPECT_EQ(spacetime_norm(zeros, 0.0, 0.1, 2.0, 2.0, 0.5, 0.0).value, 0.0);
    EXPECT_THROW(spacetime_norm({}, 0.0, 0.1, 2.0, 2.0, 0.5, 0.0), DomainError);

    std::mt19937_64 rng(8);
    Field f = test::random_smooth_field(g, rng);
    const double spatial = besov_norm(g, f.re, 2.0, 1.0, false) + besov_norm(g, f.im, 2.0, 1.0, true);
    EXPECT_NEAR(spacetime_norm({f, f, f}, 0.0, 0.2, INFINITY, 2.0, 0.0, 0.0).value, spatial, 1e-14 * spatial);

    // two-point trapezoid with weights e^{eta |pivot - t|}
    Field h = f * 0.5;
    const double eta = 0.3, pivot = 1.0, dt = 0.25, p = 2.0;
    const double n0 = spatial * std::exp(eta * 1.0), n1 = 0.5 * spatial * std::exp(eta * 0.75);
    const double hand = std::sqrt(0.5 * dt * (n0 * n0 + n1 * n1));
    EXPECT_NEAR(spacetime_norm({f, h}, 0.0, dt, p, 2.0, eta, pivot).value, hand, 1e-13 * hand);
    EXPECT_TRUE(spacetime_norm({f, h}, 0.0, dt, INFINITY, 2.0, eta, pivot).admissible);
    EXPECT_FALSE(spacetime_norm({f, h}, 0.0, dt, 2.0, 2.0, eta, pivot).admissible);
}

TEST(Snapshot, RoundTrip) {
    Grid g({16, 8}, {3.5, 2.0});
    std::mt19937_64 rng(9);
    Field f = test::random_smooth_field(g, rng);
    std::stringstream ss;
    write_snapshot(ss, f);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, 4), "IMKF");
    EXPECT_EQ(bytes.size(), 4 + 4 + 4 + 2 * 4 + 2 * 8 + 2 * 8 * g.size());
    Field r = read_snapshot(ss);
    EXPECT_EQ(r.grid, g);
    EXPECT_EQ(test::max_abs_diff(r, f), 0.0);
}
