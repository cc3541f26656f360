#include "imk/propagator.hpp"
#include "imk/errors.hpp"
#include "imk/gp_model.hpp"
#include "imk/norms.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace imk;

namespace {

struct Model {
    std::shared_ptr<const Decomposition> dec;
    std::shared_ptr<GpBundle> bundle;
};

Model make_model(const WaveProfile& profile) {
    Model s;
    auto space = std::make_shared<PhaseSpace>(gp_phase_space(profile));
    s.dec = std::make_shared<Decomposition>(decompose(space));
    s.bundle = std::make_shared<GpBundle>(s.dec, profile);
    return s;
}

const Model& line() {
    static const Model s = make_model(test::gray_profile(128));
    return s;
}

const Model& plane() {
    static const Model s = [] {
        const WaveProfile& p = test::gray_profile(96);
        Grid g({96, 8}, {p.U.grid.lengths[0], 4.0 * std::numbers::pi});
        Vec c = Vec::Zero(2);
        c[0] = 0.5;
        return make_model(test::raw_profile(extend_profile(p.U, g), c));
    }();
    return s;
}

Vec random_fibre(const GpBundle& b, const Vec& y, std::mt19937_64& rng, double size) {
    const Vec raw = stack(test::random_smooth_field(b.grid(), rng, 1.0, 0.25));
    const Vec v = b.fibre_project(y, raw);
    return v * (size / b.fibre_norm(v));
}

BundlePoint small_point(const GpBundle& b, std::mt19937_64& rng, double size) {
    std::normal_distribution<double> n01;
    BundlePoint p = BundlePoint::zero(b.dims());
    for (int blk = 1; blk < kFiniteBlocks; ++blk)
        for (auto& x : p.coeffs(static_cast<Block>(blk))) x = size * n01(rng);
    p.V = random_fibre(b, p.y, rng, size);
    return p;
}

}  // namespace

TEST(Steppers, LawsonIsFourthOrder) {
    // x' = -4x + sin(t) x^2 with the linear part exponentiated exactly.
    const VecField N = [](double t, const Vec& x) { return Vec(std::sin(t) * x.cwiseProduct(x)); };
    const LinearFlow E = [](double h, const Vec& x) { return Vec(std::exp(-4.0 * h) * x); };
    const VecField full = [&](double t, const Vec& x) { return Vec(-4.0 * x + N(t, x)); };
    Vec x0(1);
    x0 << 0.7;
    IntegratorConfig ref;
    ref.dt = 1e-4;
    ref.scheme = Scheme::Rk4;
    const double exact = integrate(full, nullptr, x0, 0.0, 1.0, ref).x.back()[0];
    double prev = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        IntegratorConfig cfg;
        cfg.dt = h;
        const double err = std::abs(integrate(N, E, x0, 0.0, 1.0, cfg).x.back()[0] - exact);
        if (prev > 0.0) EXPECT_NEAR(std::log2(prev / err), 4.0, 0.3);
        prev = err;
    }
}

TEST(Steppers, BackwardIntegrationAndRecording) {
    const VecField f = [](double, const Vec& x) { return Vec(-x); };
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.scheme = Scheme::Rk4;
    cfg.record_every = 10;
    Vec x0(1);
    x0 << 1.0;
    const Trajectory tr = integrate(f, nullptr, x0, 1.0, 0.0, cfg);
    EXPECT_DOUBLE_EQ(tr.t.back(), 0.0);
    EXPECT_EQ(tr.t.size(), 11u);
    EXPECT_NEAR(tr.x.back()[0], std::exp(1.0), 1e-9);
}

TEST(Steppers, BlowupAndBadStep) {
    const VecField f = [](double, const Vec& x) { return Vec(x.cwiseProduct(x)); };
    Vec x0(1);
    x0 << 1.0;
    IntegratorConfig cfg;
    cfg.scheme = Scheme::Rk4;
    cfg.dt = 1e-3;
    cfg.horizon = 2.0;
    try {
        integrate(f, nullptr, x0, 0.0, 2.0, cfg);
        FAIL() << "expected divergence";
    } catch (const TrajectoryDivergence& e) {
        EXPECT_FALSE(e.trajectory.t.empty());
        EXPECT_LT(e.trajectory.t.back(), 1.01);
    }
    cfg.dt = 0.0;
    EXPECT_THROW(integrate(f, nullptr, x0, 0.0, 1.0, cfg), StepSizeError);
    EXPECT_THROW(parse_scheme("euler"), ParameterError);
    EXPECT_EQ(parse_scheme("rk4"), Scheme::Rk4);
}

TEST(SymbolExponential, GroupPropertyAndGenerator) {
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(3);
    const Vec v = stack(test::random_smooth_field(b.grid(), rng, 1.0, 0.3));
    const Vec& c = b.profile().c;
    const Vec a = symbol_exponential(b.grid(), c, 2.0, 0.3, symbol_exponential(b.grid(), c, 2.0, 0.4, v));
    const Vec ab = symbol_exponential(b.grid(), c, 2.0, 0.7, v);
    EXPECT_LT((a - ab).cwiseAbs().maxCoeff(), 1e-12);
    const Vec back = symbol_exponential(b.grid(), c, 2.0, -0.7, ab);
    EXPECT_LT((back - v).cwiseAbs().maxCoeff(), 1e-12);

    const double h = 1e-5;
    const Vec fd = (symbol_exponential(b.grid(), c, 2.0, h, v) - symbol_exponential(b.grid(), c, 2.0, -h, v)) / (2 * h);
    const Vec gen = stack(b.ops(Vec::Zero(b.dims().k))->apply_JL_inf(unstack(b.grid(), v)));
    EXPECT_LT((fd - gen).cwiseAbs().maxCoeff() / gen.cwiseAbs().maxCoeff(), 1e-7);
}

TEST(DirectFlow, WaveIsStationaryAndEnergyConserved) {
    const WaveProfile& w = test::gray_profile(128);
    const GpDirectFlow flow(w.U.grid, w.c);
    IntegratorConfig cfg;
    cfg.dt = 1e-2;
    cfg.horizon = 2.0;
    cfg.record_every = 50;
    const auto states = flow.evolve(w.U, cfg);
    EXPECT_LT(test::max_abs_diff(states.back(), w.U), 1e-8);

    std::mt19937_64 rng(5);
    const Field U0 = w.U + test::random_smooth_field(w.U.grid, rng, 0.05, 0.2);
    cfg.dt = 5e-3;
    const auto pert = flow.evolve(U0, cfg);
    const double e0 = energy_momentum(U0, w.c);
    for (const Field& U : pert) EXPECT_NEAR(energy_momentum(U, w.c), e0, 1e-8 * std::abs(e0) + 1e-10);
}

TEST(LinearizedFlow, GrowthRateMatchesUnstableEigenvalue) {
    const Model& m = plane();
    ASSERT_GT(m.dec->lambda, 0.0);
    const GpBundle& b = *m.bundle;
    std::mt19937_64 rng(11);
    const Vec V0 = stack(test::random_smooth_field(b.grid(), rng, 1e-6, 0.3));
    IntegratorConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 60.0;
    cfg.record_every = 50;
    const Trajectory tr = linearized_flow(*b.ops(Vec::Zero(b.dims().k)), V0, cfg);
    std::vector<double> mag;
    for (const Vec& x : tr.x) mag.push_back(x1_norm(b.grid(), x));
    const RateFit fit = fit_log_rate(tr.t, mag, 30.0, 60.0);
    EXPECT_NEAR(fit.rate, m.dec->lambda, 0.03 * m.dec->lambda);
}

TEST(RateFit, ExactExponential) {
    std::vector<double> t, m;
    for (int i = 0; i <= 20; ++i) {
        t.push_back(0.5 * i);
        m.push_back(3.0 * std::exp(0.25 * t.back()));
    }
    const RateFit f = fit_log_rate(t, m, 2.0, 8.0);
    EXPECT_NEAR(f.rate, 0.25, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
    EXPECT_LT(f.residual, 1e-12);
    EXPECT_EQ(f.samples, 13);
}

TEST(YPath, HermiteInterpolation) {
    Vec y0(1), v(1);
    y0 << 0.5;
    v << -0.2;
    const YPath lin = YPath::linear(y0, v, 0.0, 3.0);
    EXPECT_NEAR(lin.at(1.7)[0], 0.5 - 0.34, 1e-14);
    EXPECT_NEAR(lin.rate(2.2)[0], -0.2, 1e-14);
    EXPECT_NEAR(lin.sigma(), 0.2, 1e-14);
    const YPath osc = YPath::oscillating(Vec::Zero(1), Vec::Ones(1), 2.0, 0.0, 3.0, 600);
    EXPECT_NEAR(osc.at(1.234)[0], std::sin(2.468), 1e-8);
    EXPECT_NEAR(osc.rate(1.234)[0], 2.0 * std::cos(2.468), 1e-5);
    EXPECT_THROW(lin.at(4.0), DomainError);
    EXPECT_THROW(YPath({0.0}, {y0}, {v}), ShapeError);
}

TEST(FibreFlow, IdentityAndCocycle) {
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(13);
    const Vec y0 = Vec::Zero(b.dims().k);
    const Vec V0 = random_fibre(b, y0, rng, 1.0);
    const YPath path = YPath::oscillating(y0, Vec::Constant(b.dims().k, 0.3), 1.5, 0.0, 2.0);
    IntegratorConfig cfg;
    cfg.dt = 5e-3;
    EXPECT_EQ((flow_S(b, path, 0.7, 0.7, V0, cfg) - V0).norm(), 0.0);
    const Vec direct = flow_S(b, path, 0.0, 2.0, V0, cfg);
    const Vec split = flow_S(b, path, 1.0, 2.0, flow_S(b, path, 0.0, 1.0, V0, cfg), cfg);
    EXPECT_LT(b.fibre_norm(direct - split), 1e-8 * b.fibre_norm(V0));
    const Vec back = flow_S(b, path, 2.0, 0.0, direct, cfg);
    EXPECT_LT(b.fibre_norm(back - V0), 1e-7 * b.fibre_norm(V0));
}

TEST(FibreFlow, StaysInMovingFibreAndEnergyConserved) {
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(17);
    const Vec y0 = Vec::Zero(b.dims().k);
    const Vec V0 = random_fibre(b, y0, rng, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 5e-3;
    cfg.record_every = 20;

    const YPath moving = YPath::oscillating(y0, Vec::Constant(b.dims().k, 0.5), 1.0, 0.0, 3.0);
    const LinearRun run = duhamel_solve(b, moving, 0.0, 3.0, V0, nullptr, cfg);
    for (const Vec& p : run.perp) EXPECT_LT(b.fibre_norm(p), 1e-7);

    const YPath still = YPath::constant(y0, 0.0, 3.0);
    const LinearRun rest = duhamel_solve(b, still, 0.0, 3.0, V0, nullptr, cfg);
    const double e0 = fibre_energy(b, y0, V0);
    EXPECT_GT(e0, 0.0);
    for (std::size_t i = 1; i < rest.traj.t.size(); ++i)
        EXPECT_LT(std::abs(fibre_energy(b, y0, rest.traj.x[i]) - e0) / (e0 * rest.traj.t[i]), 1e-8);
}

TEST(FibreFlow, TransverseComponentDecouples) {
    // A start vector off the fibre: its finite-rank part obeys its own equation.
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(19);
    const Vec y0 = Vec::Zero(b.dims().k);
    const Vec raw = stack(test::random_smooth_field(b.grid(), rng, 1.0, 0.25));
    const Vec W0 = raw - b.fibre_project(y0, raw);
    const VecField forcing = [&](double t, const Vec&) { return Vec(std::cos(t) * raw); };
    const YPath path = YPath::linear(y0, Vec::Constant(b.dims().k, 0.2), 0.0, 2.0);
    IntegratorConfig cfg;
    cfg.dt = 2e-3;
    cfg.record_every = 100;
    cfg.scheme = Scheme::Rk4;
    const LinearRun run = duhamel_solve(b, path, 0.0, 2.0, W0 + b.fibre_project(y0, raw), forcing, cfg);
    const Trajectory perp = integrate_perp(b, path, 0.0, 2.0, W0, forcing, cfg);
    ASSERT_EQ(perp.x.size(), run.perp.size());
    for (std::size_t i = 0; i < perp.x.size(); ++i)
        EXPECT_LT((perp.x[i] - run.perp[i]).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(FibreFlow, DuhamelWithoutForcingIsTheFlow) {
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(23);
    const Vec y0 = Vec::Zero(b.dims().k);
    const Vec V0 = random_fibre(b, y0, rng, 1.0);
    const YPath path = YPath::linear(y0, Vec::Constant(b.dims().k, 0.1), 0.0, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 1e-2;
    const LinearRun run = duhamel_solve(b, path, 0.0, 1.0, V0, nullptr, cfg);
    EXPECT_EQ((run.traj.x.back() - flow_S(b, path, 0.0, 1.0, V0, cfg)).norm(), 0.0);
}

TEST(ReducedSystem, WaveOrbitIsStationary) {
    for (const Model* m : {&line(), &plane()}) {
        const GpBundle& b = *m->bundle;
        BundlePoint p = BundlePoint::zero(b.dims());
        p.y.setConstant(0.4);
        IntegratorConfig cfg;
        cfg.dt = 0.05;
        cfg.horizon = 1.0;
        const ReducedTrajectory tr = integrate_reduced(b, p, cfg);
        const BundlePoint& q = tr.points.back();
        EXPECT_LT((q.y - p.y).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(q.transverse().size() ? q.transverse().cwiseAbs().maxCoeff() : 0.0, 1e-12);
        EXPECT_LT(q.V.cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ReducedSystem, MatchesDirectFlowThroughChart) {
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(29);
    const BundlePoint p0 = small_point(b, rng, 1e-3);
    IntegratorConfig cfg;
    cfg.dt = 2e-3;
    cfg.horizon = 1.0;
    cfg.record_every = 50;
    const ReducedTrajectory red = integrate_reduced(b, p0, cfg);
    std::vector<double> times;
    const auto direct = GpDirectFlow(b.grid(), b.profile().c).evolve(b.chart(p0), cfg, &times);
    ASSERT_EQ(times.size(), red.t.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        EXPECT_LT(x1_norm(b.chart(red.points[i]) - direct[i]), 1e-6) << "t = " << times[i];
    const double e0 = red.energy.front();
    for (double e : red.energy) EXPECT_NEAR(e, e0, 1e-9);
}

TEST(ReducedSystem, CutoffModeAgreesOnPlateau) {
    const GpBundle& b = *line().bundle;
    std::mt19937_64 rng(31);
    const BundlePoint p0 = small_point(b, rng, 1e-5);
    IntegratorConfig cfg;
    cfg.dt = 5e-3;
    cfg.horizon = 0.5;
    const CutoffParams params = CutoffParams::defaults(1.0);
    const auto red = integrate_reduced(b, p0, cfg);
    const auto cut = integrate_reduced(b, p0, cfg, ReducedMode::Cutoff, params);
    const BundlePoint d = red.points.back() + (-1.0) * cut.points.back();
    EXPECT_LT(d.y.cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(b.fibre_norm(d.V), 1e-14);
    EXPECT_TRUE(cut.energy.empty());
    EXPECT_THROW(parse_reduced_mode("graph"), ParameterError);
}

TEST(LinearEstimates, SigmaAndEtaSweeps) {
    const GpBundle& b = *line().bundle;
    LinearEstimateScenario sc;
    const LinearEstimateReport r = measure_linear_estimate(b, sc);
    EXPECT_LT(r.energy_drift, 1e-8);
    ASSERT_EQ(r.exponents.size(), sc.sigmas.size());
    EXPECT_LT(r.exponents.front(), 1e-8);
    EXPECT_GT(r.exponent_slope, 0.0);
    EXPECT_GE(r.exponent_r2, 0.99);
    ASSERT_EQ(r.prefactors.size(), sc.etas.size());
    for (std::size_t i = 1; i < r.prefactors.size(); ++i) EXPECT_LT(r.prefactors[i], r.prefactors[i - 1]);
    EXPECT_LE(r.normalized_spread, 0.2);
}
