#include "imk/harness.hpp"
#include "imk/errors.hpp"
#include "imk/phase_space.hpp"
#include "imk/suite.hpp"
#include "imk/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace imk;

namespace {

constexpr double kLambda = 1.0;

CutoffParams toy_params() { return {1e-2, 0.1, 4.0, 0.25}; }

SolverConfig toy_solver() {
    SolverConfig cfg;
    cfg.integrator.dt = 0.05;
    cfg.integrator.scheme = Scheme::Rk4;
    cfg.tol = 1e-13;
    return cfg;
}

RateExperiment toy_rates() {
    RateExperiment ex;
    ex.integrator.dt = 0.02;
    ex.integrator.scheme = Scheme::Rk4;
    ex.floor = 1e-5;
    return ex;
}

struct Graphs {
    GraphFn cu, cs, c;
};

const Graphs& hamiltonian() {
    static const Graphs g = [] {
        static const ToySystem sys = ToySystem::hamiltonian(kLambda, 2.0);
        GraphFn cu = solve_graph(sys, Side::Cu, toy_params(), 2, {9, 9, 9}, toy_solver()).graph;
        GraphFn cs = solve_graph(sys, Side::Cs, toy_params(), 2, {9, 9, 9}, toy_solver()).graph;
        GraphFn c = center_graph(cu, cs);
        return Graphs{cu, cs, c};
    }();
    return g;
}

const ToySystem& quadratic() {
    static const ToySystem s = ToySystem::quadratic(kLambda);
    return s;
}

const GraphFn& quadratic_graph(Side side) {
    static const GraphFn cu = solve_graph(quadratic(), Side::Cu, toy_params(), 1, {41, 5}, toy_solver()).graph;
    static const GraphFn cs = solve_graph(quadratic(), Side::Cs, toy_params(), 1, {41, 5}, toy_solver()).graph;
    return side == Side::Cu ? cu : cs;
}

EnsembleSpec near_graph(double offset, unsigned seed = 1) {
    EnsembleSpec e;
    e.samples = 8;
    e.hyperbolic = 1e-5;
    e.fibre = 1e-3;
    e.offset = offset;
    e.seed = seed;
    return e;
}

struct GpLine {
    std::shared_ptr<const Decomposition> dec;
    std::shared_ptr<GpBundle> bundle;
};

const GpLine& gray_line() {
    static const GpLine m = [] {
        const WaveProfile& p = test::gray_profile(128);
        auto space = std::make_shared<PhaseSpace>(gp_phase_space(p));
        GpLine s;
        s.dec = std::make_shared<Decomposition>(decompose(space));
        s.bundle = std::make_shared<GpBundle>(s.dec, p);
        return s;
    }();
    return m;
}

}  // namespace

TEST(Attraction, QuadraticRateMatchesLambda) {
    const GraphFn& h = quadratic_graph(Side::Cu);
    const ExperimentReport r = measure_attraction_cu(h, graph_ensemble(h, near_graph(1e-3)), toy_rates());
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.metric("fitted"), 8.0);
    EXPECT_NEAR(r.rate_min, kLambda, 0.05 * kLambda);
    EXPECT_NEAR(r.rate_mean, kLambda, 0.05 * kLambda);
    for (const OrbitFit& o : r.orbits) EXPECT_LT(o.fit.residual, 0.1);
}

TEST(Attraction, CoupledRateClearsThreshold) {
    const GraphFn& h = hamiltonian().cu;
    const ExperimentReport r = measure_attraction_cu(h, graph_ensemble(h, near_graph(1e-3)), toy_rates());
    EXPECT_TRUE(r.pass) << r.rate_min << " vs " << r.threshold;
    EXPECT_NEAR(r.threshold, (kLambda - 0.5) * 0.9, 1e-15);
    EXPECT_GE(r.rate_min, r.threshold);
}

TEST(Attraction, GraphPointsStayOnGraph) {
    const GraphFn& h = quadratic_graph(Side::Cu);
    RateExperiment ex = toy_rates();
    ex.horizon = 3.0;
    const ExperimentReport r = measure_attraction_cu(h, graph_ensemble(h, near_graph(0.0)), ex);
    for (const OrbitFit& o : r.orbits) EXPECT_LE(o.max_distance, 1e-6);
}

TEST(Attraction, SeedsAgree) {
    const GraphFn& h = hamiltonian().cu;
    const ExperimentReport a = measure_attraction_cu(h, graph_ensemble(h, near_graph(1e-3, 1)), toy_rates());
    const ExperimentReport b = measure_attraction_cu(h, graph_ensemble(h, near_graph(1e-3, 2)), toy_rates());
    EXPECT_NEAR(a.rate_mean, b.rate_mean, 0.05 * kLambda);
}

TEST(Attraction, EnsembleOutsideTubeIsRejected) {
    const GraphFn& h = hamiltonian().cu;
    EXPECT_THROW(measure_attraction_cu(h, graph_ensemble(h, near_graph(2e-2)), toy_rates()), DomainError);
}

TEST(Ejection, QuadraticRateMatchesLambda) {
    const GraphFn& h = quadratic_graph(Side::Cs);
    const ExperimentReport r = measure_ejection_cs(h, graph_ensemble(h, near_graph(1e-5)), toy_rates());
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.rate_mean, kLambda, 0.05 * kLambda);
    for (const OrbitFit& o : r.orbits) EXPECT_TRUE(o.truncated);
}

TEST(Ejection, CoupledRateClearsThreshold) {
    const GraphFn& h = hamiltonian().cs;
    const ExperimentReport r = measure_ejection_cs(h, graph_ensemble(h, near_graph(1e-5)), toy_rates());
    EXPECT_TRUE(r.pass) << r.rate_min << " vs " << r.threshold;
    EXPECT_EQ(r.metric("fitted"), 8.0);
}

TEST(CenterAttraction, OrbitsOnCsApproachCentreGraph) {
    const Graphs& g = hamiltonian();
    EnsembleSpec e = near_graph(0.0);
    e.hyperbolic = 1e-3;
    const ExperimentReport r = measure_center_attraction(g.cs, g.c, graph_ensemble(g.cs, e), toy_rates());
    EXPECT_TRUE(r.pass) << r.rate_min << " vs " << r.threshold;
}

TEST(Tube, ClassificationMatchesGraphs) {
    const Graphs& g = hamiltonian();
    const auto cands = tube_candidates(g.cu, g.cs, g.c, CandidateSpec{});
    ASSERT_EQ(cands.size(), 50u);
    TubeConfig cfg;
    cfg.integrator.dt = 0.02;
    cfg.integrator.scheme = Scheme::Rk4;
    const TubeReport r = tube_characterization(g.cu, g.cs, cands, cfg);
    EXPECT_EQ(r.disagreements, 0);
    EXPECT_TRUE(r.summary.pass);
    for (const Classification& c : r.rows) {
        if (c.kind == "centre") EXPECT_TRUE(c.center());
        if (c.kind == "cu") EXPECT_TRUE(c.tube_cu && !c.tube_cs);
        if (c.kind == "cs") EXPECT_TRUE(!c.tube_cu && c.tube_cs);
        if (c.kind == "off") EXPECT_TRUE(!c.tube_cu && !c.tube_cs);
    }
    EXPECT_EQ(r.summary.details["rows"].size(), 50u);
}

TEST(Nondegenerate, EnergyCubicAndCentreConfinement) {
    const NondegReport r = nondegenerate_stability(hamiltonian().c, NondegConfig{});
    EXPECT_EQ(r.summary.status, "ok");
    EXPECT_EQ(r.summary.metric("energy_at_base"), 0.0);
    EXPECT_NEAR(r.slope, 3.0, 0.2);
    EXPECT_TRUE(r.energy_pass);
    EXPECT_NEAR(r.horizon, 100.0 / kLambda, 1e-12);
    EXPECT_LT(r.max_size, r.tube);
    EXPECT_TRUE(r.orbit_pass);
    EXPECT_TRUE(r.summary.pass);
}

TEST(Nondegenerate, SkippedWithoutEnergy) {
    const ToySystem sys = ToySystem::coupled(kLambda, 2.0);
    const GraphFn hc(sys, Side::Center, toy_params(), 2, {3, 3});
    const NondegReport r = nondegenerate_stability(hc, NondegConfig{});
    EXPECT_EQ(r.summary.status, "skipped");
    EXPECT_FALSE(r.summary.pass);
}

TEST(Nondegenerate, GraySolitonOnTorusIsDegenerate) {
    const GpLine& m = gray_line();
    const NondegeneracyCheck c = check_nondegeneracy(*m.dec);
    EXPECT_EQ(c.d, 0);
    EXPECT_EQ(c.translations, 1);
    EXPECT_EQ(c.negative, m.dec->n_minus);
    EXPECT_FALSE(c.h1);
    EXPECT_NE(c.reason.find("kernel dimension"), std::string::npos);

    const GraphFn hc(*m.bundle, Side::Center, CutoffParams{}, 1, {1, 1, 1});
    const NondegReport r = nondegenerate_stability(hc, NondegConfig{});
    EXPECT_EQ(r.summary.status, "skipped");
    EXPECT_EQ(r.summary.details["nondegeneracy"]["d1"], m.dec->d1);
}

TEST(Neighbor, ParallelNeighbourIsOnCentreManifold) {
    const GpLine& m = gray_line();
    Vec c2 = m.bundle->profile().c;
    c2[0] += 1e-3;
    const WaveProfile q = neighbor_profile(m.bundle->profile(), c2);
    const NeighborReport r = neighboring_wave_membership(*m.bundle, q, CutoffParams{}, nullptr, nullptr, {});
    EXPECT_LT(r.initial_size, 1e-2);
    EXPECT_TRUE(r.member_cu);
    EXPECT_TRUE(r.member_cs);
    EXPECT_TRUE(r.member_c);
    EXPECT_TRUE(r.summary.pass);
    EXPECT_GT(r.trace.t.size(), 10u);
    EXPECT_LT(r.trace.t.front(), 0.0);
}

TEST(Neighbor, SameWaveIsTrivial) {
    const GpLine& m = gray_line();
    NeighborConfig cfg;
    cfg.horizon = 2.0;
    const NeighborReport r = neighboring_wave_membership(*m.bundle, m.bundle->profile(), CutoffParams{}, nullptr,
                                                         nullptr, cfg);
    EXPECT_LT(r.initial_size, 1e-8);
    EXPECT_LT(r.max_size_forward, 1e-6);
    EXPECT_TRUE(r.member_c);
}

TEST(Neighbor, DistantWaveIsRefused) {
    const GpLine& m = gray_line();
    Vec c2 = m.bundle->profile().c;
    c2[0] += 2e-2;
    const WaveProfile q = neighbor_profile(m.bundle->profile(), c2);
    EXPECT_THROW(neighboring_wave_membership(*m.bundle, q, CutoffParams{}, nullptr, nullptr, {}), DomainError);
}

TEST(Report, JsonAndCsv) {
    const GraphFn& h = quadratic_graph(Side::Cu);
    EnsembleSpec e = near_graph(1e-3);
    e.samples = 2;
    ExperimentReport r = measure_attraction_cu(h, graph_ensemble(h, e), toy_rates());
    const auto path = std::filesystem::temp_directory_path() / "imk_harness_traces.csv";
    write_trace_csv(path.string(), r);
    r.artifacts.push_back(path.string());
    const nlohmann::json j = r.to_json();
    EXPECT_EQ(j["scenario"], "attraction_cu");
    EXPECT_EQ(j["orbits"].size(), 2u);
    EXPECT_TRUE(j["orbits"][0].contains("fit_residual"));
    EXPECT_EQ(j["metrics"]["fitted"], 2.0);
    EXPECT_EQ(j["artifacts"][0], path.string());

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "orbit,t,distance");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, r.traces[0].t.size() + r.traces[1].t.size());
    std::filesystem::remove(path);
}

TEST(Suite, ConfigSections) {
    const SuiteConfig c = parse_suite_config(R"(
system:
  kind: toy-coupled
  lambda: 2.0
cutoff:
  delta: 0.02
  eta: 0.3
graphs:
  points: 7
  scheme: rk4
  dt: 0.05
attraction:
  samples: 3
  floor: 1.0e-6
tube:
  samples: 12
neighbor:
  velocity_shift: 2.0e-3
)");
    EXPECT_EQ(c.system, "toy-coupled");
    EXPECT_EQ(c.lambda, 2.0);
    EXPECT_EQ(c.params.delta, 0.02);
    EXPECT_EQ(c.params.eta, 0.3);
    EXPECT_EQ(c.params.Q, 4.0);
    EXPECT_EQ(c.graph_points, 7);
    EXPECT_EQ(c.solver.integrator.scheme, Scheme::Rk4);
    EXPECT_EQ(c.solver.integrator.dt, 0.05);
    EXPECT_EQ(c.attraction.samples, 3);
    EXPECT_EQ(c.rates.floor, 1e-6);
    EXPECT_EQ(c.candidates.samples, 12);
    EXPECT_EQ(c.velocity_shift, 2e-3);
    EXPECT_THROW(parse_suite_config("cutoff: {delta: [1, 2]}"), ParameterError);
    EXPECT_THROW(parse_suite_config("system: {kind: x"), ParameterError);
}

TEST(Suite, ToyRunCoversEverySuite) {
    SuiteConfig c = parse_suite_config(R"(
system: {kind: toy-hamiltonian}
graphs: {points: 9, modes: 2, scheme: rk4, dt: 0.05, tol: 1.0e-13}
integrator: {scheme: rk4, dt: 0.02}
)");
    const auto stem = (std::filesystem::temp_directory_path() / "imk_suite").string();
    const SuiteResult r = run_suite("all", c, stem);
    ASSERT_EQ(r.reports.size(), suite_names().size());
    for (const ExperimentReport& e : r.reports) {
        if (e.scenario == "neighboring_wave") EXPECT_EQ(e.status, "skipped");
        else EXPECT_TRUE(e.pass) << e.scenario << ": " << e.reason;
        for (const std::string& a : e.artifacts) {
            EXPECT_TRUE(std::filesystem::exists(a));
            std::filesystem::remove(a);
        }
    }
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.to_json()["reports"].size(), suite_names().size());
    EXPECT_THROW(run_suite("bogus", c), ParameterError);
}

TEST(Suite, LatticeRunFromSavedProfile) {
    const auto path = (std::filesystem::temp_directory_path() / "imk_suite_profile.imkf").string();
    save_wave_profile(path, test::gray_profile(128));
    const WaveProfile back = load_wave_profile(path);
    EXPECT_EQ(back.c, test::gray_profile(128).c);
    EXPECT_EQ(test::max_abs_diff(back.U, test::gray_profile(128).U), 0.0);

    SuiteConfig c;
    c.system = "gp";
    c.profile = path;
    c.graph_modes = 1;
    const SuiteResult r = run_suite("all", c);
    for (const ExperimentReport& e : r.reports) {
        if (e.scenario == "neighboring_wave") EXPECT_TRUE(e.pass) << e.reason;
        else EXPECT_EQ(e.status, "skipped") << e.scenario;
    }
    EXPECT_TRUE(r.pass());
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
}
