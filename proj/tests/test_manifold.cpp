#include "imk/manifold.hpp"
#include "imk/errors.hpp"
#include "imk/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace imk;

namespace {

constexpr double kLambda = 1.0;

CutoffParams toy_params(double delta = 1e-2) { return {delta, 0.1, 4.0, 0.25}; }

SolverConfig toy_solver() {
    SolverConfig cfg;
    cfg.integrator.dt = 0.05;
    cfg.integrator.scheme = Scheme::Rk4;
    cfg.tol = 1e-13;
    return cfg;
}

const ToySystem& quadratic() {
    static const ToySystem s = ToySystem::quadratic(kLambda);
    return s;
}

/// Samples whose graph point lies inside the plateau |a| + |h| + |V| <= delta / 3.
std::vector<Eigen::Index> plateau_samples(const GraphFn& h) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < h.sample_count(); ++i) {
        const BundlePoint W = h.point_at(h.sample_coords(i), Vec::Zero(h.system().dims().k));
        if (transverse_size(W, h.system().fibre_norm(W.V)) <= h.params().delta / 3.0) out.push_back(i);
    }
    return out;
}

const GraphSolution& quadratic_cu() {
    static const GraphSolution s = solve_graph(quadratic(), Side::Cu, toy_params(), 1, {41, 5}, toy_solver());
    return s;
}

}  // namespace

TEST(GraphFn, LayoutInterpolationAndClosure) {
    const ToySystem sys = ToySystem::coupled(kLambda, 2.0);
    GraphFn h = GraphFn::uniform(sys, Side::Cu, toy_params(), 2, 5);
    EXPECT_EQ(h.axes(), 3);
    EXPECT_EQ(h.sample_count(), 125);
    EXPECT_EQ(h.value_size(), 1);
    // A linear function is reproduced exactly by multilinear interpolation.
    for (Eigen::Index i = 0; i < h.sample_count(); ++i) {
        const Vec x = h.sample_coords(i);
        h.values()(0, i) = 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2];
    }
    Vec q(3);
    q << 0.0031, -0.0047, 0.0093;
    EXPECT_NEAR(h.eval_coords(q)[0], 1.0 + 2.0 * q[0] - q[1] + 0.5 * q[2], 1e-15);
    // Clamping outside the box.
    Vec far = q;
    far[0] = 1.0;
    Vec edge = q;
    edge[0] = h.half_width();
    EXPECT_EQ(h.eval_coords(far)[0], h.eval_coords(edge)[0]);

    const BundlePoint W = h.point_at(q, Vec::Constant(1, 0.3));
    EXPECT_NEAR(W.a_minus[0], h.eval_coords(q)[0], 1e-15);
    double discarded = 1.0;
    EXPECT_LT((h.coords_of(W, &discarded) - q).norm(), 1e-15);
    EXPECT_LT(discarded, 1e-15);
    EXPECT_THROW(GraphFn(sys, Side::Cu, toy_params(), 2, {5, 5}), ShapeError);
    EXPECT_THROW(parse_side("up"), ParameterError);
}

TEST(LyapunovPerron, ZeroGraphOnBaseAndLinearSystem) {
    // Linear system: the operator maps every graph to zero.
    const ToySystem lin(1, 1, kLambda, Mat::Zero(1, 1), [](const BundlePoint& W) { return BundlePoint::zero(W.dims()); });
    GraphFn h = GraphFn::uniform(lin, Side::Cu, toy_params(), 1, 7);
    h.values().setConstant(1e-3);
    const LpResult r = lp_apply(h, toy_solver());
    EXPECT_EQ(r.graph.sup(), 0.0);
    EXPECT_LT(r.tail_bound, 1e-7);
    // Nonlinear system, zero graph: output vanishes on the base point.
    const GraphFn z = GraphFn::uniform(quadratic(), Side::Cu, toy_params(), 1, 9);
    EXPECT_EQ(lp_apply(z, toy_solver()).graph.base_value(), 0.0);
}

TEST(LyapunovPerron, QuadraticSystemGraphMatchesPolynomialOracle) {
    const GraphSolution& s = quadratic_cu();
    EXPECT_TRUE(s.report.converged);
    const auto plateau = plateau_samples(s.graph);
    ASSERT_GE(plateau.size(), 10u);
    double err = 0.0;
    for (Eigen::Index i : plateau) {
        const double ap = s.graph.sample_coords(i)[0];
        err = std::max(err, std::abs(s.graph.values()(0, i) - ap * ap / (3.0 * kLambda)));
    }
    EXPECT_LT(err, 1e-6);
    const GammaCheck g = gamma_check(s.graph);
    EXPECT_TRUE(g.pass) << g.base << " " << g.lipschitz << " " << g.sup;
    for (std::size_t k = 0; k < s.report.ratios.size(); ++k) EXPECT_LT(s.report.ratios[k], 1.0);
}

TEST(LyapunovPerron, ContractionImprovesWhenDeltaHalves) {
    std::vector<double> ratio;
    for (double delta : {2e-2, 1e-2, 5e-3}) {
        GraphFn h = GraphFn::uniform(quadratic(), Side::Cu, toy_params(delta), 1, 15);
        // Two steps from an arbitrary start measure the Lipschitz ratio of the operator.
        for (Eigen::Index i = 0; i < h.sample_count(); ++i) h.values()(0, i) = 0.05 * delta * std::sin(40.0 * h.sample_coords(i)[0] / delta);
        const GraphFn a = lp_apply(h, toy_solver()).graph;
        const GraphFn b = lp_apply(a, toy_solver()).graph;
        const double d0 = (a.values() - h.values()).cwiseAbs().maxCoeff();
        const double d1 = (b.values() - a.values()).cwiseAbs().maxCoeff();
        ratio.push_back(d1 / d0);
    }
    for (double r : ratio) EXPECT_LT(r, 1.0);
    // The bound is linear in delta.
    for (std::size_t k = 1; k < ratio.size(); ++k) EXPECT_NEAR(ratio[k] / ratio[k - 1], 0.5, 0.15);
}

TEST(Invariance, ResidualOnQuadraticGraph) {
    const GraphSolution& s = quadratic_cu();
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.scheme = Scheme::Rk4;
    const ResidualStats r = invariance_residual(s.graph, plateau_samples(s.graph), 0.1, ic);
    EXPECT_LT(r.max, 1e-6);
}

namespace {

const ToySystem& coupled() {
    static const ToySystem s = ToySystem::coupled(kLambda, 2.0);
    return s;
}

const GraphSolution& coupled_graph(Side side) {
    static const GraphSolution cu = solve_graph(coupled(), Side::Cu, toy_params(), 2, {9, 9, 9}, toy_solver());
    static const GraphSolution cs = solve_graph(coupled(), Side::Cs, toy_params(), 2, {9, 9, 9}, toy_solver());
    return side == Side::Cu ? cu : cs;
}

}  // namespace

TEST(LyapunovPerron, CoupledGraphsStayInTheGraphClass) {
    for (Side side : {Side::Cu, Side::Cs}) {
        const GraphSolution& s = coupled_graph(side);
        EXPECT_TRUE(s.report.converged) << side_name(side);
        EXPECT_LT(s.report.contraction, 1.0);
        const GammaCheck g = gamma_check(s.graph);
        EXPECT_TRUE(g.pass) << side_name(side) << " " << g.base << " " << g.lipschitz << " " << g.sup;
        EXPECT_GT(s.graph.sup(), 0.0);
    }
}

TEST(LyapunovPerron, TranslationInvariance) {
    const GraphFn& h = coupled_graph(Side::Cu).graph;
    Vec c(3);
    c << 0.002, -0.001, 0.0015;
    const BundlePoint W = h.point_at(c, Vec::Zero(1));
    BundlePoint shifted = W;
    shifted.y[0] = 2.7;
    EXPECT_LT(std::abs(h.eval(W)[0] - h.eval(shifted)[0]), 1e-12);
}

TEST(LyapunovPerron, ReversedSystemExchangesSides) {
    const ToySystem rev = coupled().reversed();
    const GraphSolution r = solve_graph(rev, Side::Cs, toy_params(), 2, {9, 9, 9}, toy_solver());
    const GraphFn& cu = coupled_graph(Side::Cu).graph;
    EXPECT_LT((r.graph.values() - cu.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Invariance, CoupledResidualShrinksWithResolution) {
    IntegratorConfig ic;
    ic.dt = 1e-3;
    ic.scheme = Scheme::Rk4;
    const GraphFn& coarse = coupled_graph(Side::Cu).graph;
    const GraphSolution fine = solve_graph(coupled(), Side::Cu, toy_params(), 2, {17, 17, 17}, toy_solver());
    auto inner = [](const GraphFn& h) {
        std::vector<Eigen::Index> out;
        for (Eigen::Index i = 0; i < h.sample_count(); ++i)
            if (h.sample_coords(i).cwiseAbs().maxCoeff() <= 0.5 * h.half_width() + 1e-15) out.push_back(i);
        return out;
    };
    const ResidualStats a = invariance_residual(coarse, inner(coarse), 0.1, ic);
    const ResidualStats b = invariance_residual(fine.graph, inner(fine.graph), 0.1, ic);
    EXPECT_LT(b.max, a.max);
    EXPECT_LT(b.max, 1e-5);
}

TEST(Jets, TangentAtBaseAndFiniteDifferences) {
    const GraphFn& h = coupled_graph(Side::Cu).graph;
    const SolverConfig cfg = toy_solver();
    JetReport rep;
    const GraphFn j = jet1_solve(h, cfg, &rep);
    EXPECT_TRUE(rep.converged);
    EXPECT_LT(j.jet_coords(Vec::Zero(3)).cwiseAbs().maxCoeff(), 1e-8);
    // Centred differences of the operator itself (h = T h at the fixed point), step 1e-3,
    // on the samples where the cut-off is identically one.
    const double step = 1e-3;
    double worst = 0.0;
    const auto plateau = plateau_samples(h);
    ASSERT_GE(plateau.size(), 7u);
    for (Eigen::Index i : plateau) {
        const Vec x = h.sample_coords(i);
        for (Eigen::Index a = 0; a < 3; ++a) {
            Vec xp = x, xm = x;
            xp[a] += step;
            xm[a] -= step;
            const double fd = (lp_value(h, xp, cfg)[0] - lp_value(h, xm, cfg)[0]) / (2.0 * step);
            worst = std::max(worst, std::abs(fd - j.jet()[i](0, a)));
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Jets, QuadraticJetMatchesDerivativeOfOracle) {
    const GraphSolution& s = quadratic_cu();
    const GraphFn j = jet1_solve(s.graph, toy_solver());
    for (Eigen::Index i : plateau_samples(s.graph)) {
        const double ap = s.graph.sample_coords(i)[0];
        EXPECT_NEAR(j.jet()[i](0, 0), 2.0 * ap / (3.0 * kLambda), 1e-6);
    }
}

TEST(CenterGraph, IntersectionOfCuAndCs) {
    const GraphFn& cu = coupled_graph(Side::Cu).graph;
    const GraphFn& cs = coupled_graph(Side::Cs).graph;
    CenterReport rep;
    const GraphFn hc = center_graph(cu, cs, 1e-15, 200, &rep);
    EXPECT_EQ(hc.axes(), 2);
    EXPECT_EQ(hc.value_size(), 2);
    EXPECT_LT(hc.base_value(), 1e-15);
    EXPECT_LE(hc.lipschitz(), 0.1 / 0.9);
    // Each value lies on both graphs.
    for (Eigen::Index i = 0; i < hc.sample_count(); ++i) {
        const Vec c = hc.sample_coords(i);
        const double ap = hc.values()(0, i), am = hc.values()(1, i);
        EXPECT_NEAR(cs.eval_coords(Vec((Vec(3) << am, c).finished()))[0], ap, 1e-14);
        EXPECT_NEAR(cu.eval_coords(Vec((Vec(3) << ap, c).finished()))[0], am, 1e-14);
    }
    Vec c(2);
    c << 0.004, -0.003;
    const double mu = 0.1;
    EXPECT_LE((center_value(cu, cs, c, 20) - center_value(cu, cs, c, 40)).cwiseAbs().maxCoeff(), std::pow(mu, 20) + 1e-18);

    GraphFn z1 = cu.zeros_like(), z2 = cs.zeros_like();
    EXPECT_EQ(center_graph(z1, z2).sup(), 0.0);
}

TEST(GraphFile, RoundTrip) {
    const GraphFn j = jet1_solve(quadratic_cu().graph, toy_solver());
    const auto path = std::filesystem::temp_directory_path() / "imk_graph_roundtrip.graph";
    save_graph(path.string(), j);
    const GraphFn back = load_graph(path.string(), quadratic());
    EXPECT_EQ((back.values() - j.values()).cwiseAbs().maxCoeff(), 0.0);
    ASSERT_EQ(back.jet().size(), j.jet().size());
    EXPECT_EQ((back.jet()[3] - j.jet()[3]).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(back.side(), Side::Cu);
    EXPECT_THROW(load_graph(path.string(), coupled()), ShapeError);
    std::filesystem::remove(path);
}
