#include "imk/suite.hpp"
#include "imk/errors.hpp"
#include "imk/phase_space.hpp"
#include "imk/synthetic.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace imk {

SuiteConfig::SuiteConfig() {
    rates.floor = 1e-5;
    rates.integrator.dt = 0.02;
    tube.integrator.dt = 0.02;
}

namespace {

template <class T>
void read(const YAML::Node& n, const char* key, T& out) {
    if (n && n[key]) out = n[key].as<T>();
}

void read_scheme(const YAML::Node& n, IntegratorConfig& ic) {
    if (!n) return;
    read(n, "dt", ic.dt);
    read(n, "record_every", ic.record_every);
    if (n["scheme"]) ic.scheme = parse_scheme(n["scheme"].as<std::string>());
}

void read_ensemble(const YAML::Node& n, EnsembleSpec& e, double& horizon) {
    if (!n) return;
    read(n, "samples", e.samples);
    read(n, "hyperbolic", e.hyperbolic);
    read(n, "fibre", e.fibre);
    read(n, "offset", e.offset);
    read(n, "seed", e.seed);
    read(n, "horizon", horizon);
}

}  // namespace

SuiteConfig parse_suite_config(const std::string& text) {
    SuiteConfig c;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParameterError(std::string("malformed configuration: ") + e.what());
    }
    try {
        if (const YAML::Node s = root["system"]) {
            read(s, "kind", c.system);
            read(s, "lambda", c.lambda);
            read(s, "omega", c.omega);
            read(s, "kappa", c.kappa);
            read(s, "profile", c.profile);
            read(s, "decompose_tol", c.decompose_tol);
        }
        if (const YAML::Node s = root["cutoff"]) {
            read(s, "delta", c.params.delta);
            read(s, "mu", c.params.mu);
            read(s, "Q", c.params.Q);
            read(s, "eta", c.params.eta);
        }
        if (const YAML::Node s = root["graphs"]) {
            read(s, "points", c.graph_points);
            read(s, "modes", c.graph_modes);
            read(s, "tol", c.solver.tol);
            read(s, "max_iter", c.solver.max_iter);
            read(s, "horizon", c.solver.horizon);
            read(s, "cu", c.cu_graph);
            read(s, "cs", c.cs_graph);
            read_scheme(s, c.solver.integrator);
        }
        if (const YAML::Node s = root["integrator"]) {
            read_scheme(s, c.rates.integrator);
            read_scheme(s, c.tube.integrator);
        }
        read_ensemble(root["attraction"], c.attraction, c.attraction_horizon);
        read_ensemble(root["ejection"], c.ejection, c.ejection_horizon);
        for (const char* key : {"attraction", "ejection"})
            if (const YAML::Node s = root[key]) {
                read(s, "floor", c.rates.floor);
                read(s, "fit_tolerance", c.rates.fit_tolerance);
            }
        if (const YAML::Node s = root["tube"]) {
            read(s, "samples", c.candidates.samples);
            read(s, "radius", c.candidates.radius);
            read(s, "min_offset", c.candidates.min_offset);
            read(s, "seed", c.candidates.seed);
            read(s, "horizon", c.tube.horizon);
            read(s, "graph_tol", c.tube.graph_tol);
        }
        if (const YAML::Node s = root["nondeg"]) {
            read(s, "amp_lo", c.nondeg.amp_lo);
            read(s, "amp_hi", c.nondeg.amp_hi);
            read(s, "amplitudes", c.nondeg.amplitudes);
            read(s, "slope_tol", c.nondeg.slope_tol);
            read(s, "C", c.nondeg.C);
            read(s, "efolds", c.nondeg.efolds);
            read(s, "seed", c.nondeg.seed);
            read_scheme(s, c.nondeg.integrator);
        }
        if (const YAML::Node s = root["neighbor"]) {
            read(s, "velocity_shift", c.velocity_shift);
            read(s, "horizon", c.neighbor.horizon);
            read(s, "delta0", c.neighbor.delta0);
            read(s, "graph_tol", c.neighbor.graph_tol);
            read(s, "profile", c.neighbor_profile);
            read_scheme(s, c.neighbor.integrator);
        }
    } catch (const YAML::Exception& e) {
        throw ParameterError(std::string("bad configuration value: ") + e.what());
    }
    return c;
}

SuiteConfig load_suite_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_suite_config(ss.str());
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"attraction", "ejection", "tube", "neighbor", "nondeg"};
    return names;
}

bool SuiteResult::pass() const {
    for (const ExperimentReport& r : reports)
        if (r.status != "skipped" && !r.pass) return false;
    return true;
}

nlohmann::json SuiteResult::to_json() const {
    nlohmann::json j;
    j["pass"] = pass();
    j["reports"] = nlohmann::json::array();
    for (const ExperimentReport& r : reports) j["reports"].push_back(r.to_json());
    return j;
}

namespace {

class Runner {
public:
    explicit Runner(const SuiteConfig& cfg) : cfg_(cfg) {
        if (cfg.system == "gp") {
            if (cfg.profile.empty()) throw ParameterError("a lattice run needs system.profile");
            DecomposeOptions opt;
            opt.tol = cfg.decompose_tol;
            auto space = std::make_shared<PhaseSpace>(gp_phase_space(load_wave_profile(cfg.profile)));
            auto dec = std::make_shared<Decomposition>(decompose(space, opt));
            auto b = std::make_unique<GpBundle>(dec, load_wave_profile(cfg.profile));
            gp_ = b.get();
            sys_ = std::move(b);
        } else if (cfg.system == "toy-quadratic") {
            sys_ = std::make_unique<ToySystem>(ToySystem::quadratic(cfg.lambda));
        } else if (cfg.system == "toy-coupled") {
            sys_ = std::make_unique<ToySystem>(ToySystem::coupled(cfg.lambda, cfg.omega, cfg.kappa));
        } else if (cfg.system == "toy-hamiltonian") {
            sys_ = std::make_unique<ToySystem>(ToySystem::hamiltonian(cfg.lambda, cfg.omega, cfg.kappa));
        } else {
            throw ParameterError("unknown system kind: " + cfg.system);
        }
        cfg.params.validate(sys_->lambda());
    }

    ExperimentReport run(const std::string& suite, const std::string& stem) {
        ExperimentReport r;
        try {
            r = dispatch(suite);
        } catch (const std::exception& e) {
            r.scenario = suite;
            r.status = "error";
            r.reason = e.what();
            r.pass = false;
        }
        if (!stem.empty() && !r.traces.empty()) {
            const std::string path = stem + "_" + r.scenario + ".csv";
            write_trace_csv(path, r);
            r.artifacts.push_back(path);
        }
        return r;
    }

private:
    const SuiteConfig& cfg_;
    std::unique_ptr<CutoffSystem> sys_;
    const GpBundle* gp_ = nullptr;
    std::optional<GraphFn> cu_, cs_, c_;

    static ExperimentReport skipped(const std::string& scenario, const std::string& why) {
        ExperimentReport r;
        r.scenario = scenario;
        r.status = "skipped";
        r.reason = why;
        return r;
    }

    Eigen::Index modes() const { return std::min<Eigen::Index>(cfg_.graph_modes, sys_->dims().fibre); }

    const GraphFn& graph(Side side) {
        std::optional<GraphFn>& slot = side == Side::Cu ? cu_ : side == Side::Cs ? cs_ : c_;
        if (slot) return *slot;
        if (side == Side::Center) {
            if (sys_->dims().d == 0) {
                const GraphFn shape = GraphFn::uniform(*sys_, side, cfg_.params, modes(), cfg_.graph_points);
                slot.emplace(shape);
            } else {
                slot.emplace(center_graph(graph(Side::Cu), graph(Side::Cs)));
            }
            return *slot;
        }
        const std::string& path = side == Side::Cu ? cfg_.cu_graph : cfg_.cs_graph;
        if (!path.empty()) {
            slot.emplace(load_graph(path, *sys_));
        } else {
            const GraphFn shape = GraphFn::uniform(*sys_, side, cfg_.params, modes(), cfg_.graph_points);
            slot.emplace(solve_graph(*sys_, side, cfg_.params, modes(), shape.points(), cfg_.solver).graph);
        }
        return *slot;
    }

    ExperimentReport dispatch(const std::string& suite) {
        const bool hyperbolic = sys_->dims().d > 0;
        const std::string no_d = "d = 0: the system has no hyperbolic directions";
        if (suite == "attraction") {
            if (!hyperbolic) return skipped("attraction_cu", no_d);
            RateExperiment ex = cfg_.rates;
            ex.horizon = cfg_.attraction_horizon;
            const GraphFn& h = graph(Side::Cu);
            return measure_attraction_cu(h, graph_ensemble(h, cfg_.attraction), ex);
        }
        if (suite == "ejection") {
            if (!hyperbolic) return skipped("ejection_cs", no_d);
            RateExperiment ex = cfg_.rates;
            ex.horizon = cfg_.ejection_horizon;
            const GraphFn& h = graph(Side::Cs);
            return measure_ejection_cs(h, graph_ensemble(h, cfg_.ejection), ex);
        }
        if (suite == "tube") {
            if (!hyperbolic) return skipped("tube_characterization", no_d);
            const GraphFn &cu = graph(Side::Cu), &cs = graph(Side::Cs), &c = graph(Side::Center);
            return tube_characterization(cu, cs, tube_candidates(cu, cs, c, cfg_.candidates), cfg_.tube).summary;
        }
        if (suite == "nondeg") {
            if (!sys_->nondegenerate()) {
                const GraphFn pinned(*sys_, Side::Center, cfg_.params, modes(),
                                     std::vector<int>(sys_->dims().d1 + sys_->dims().d2 + modes(), 1));
                return nondegenerate_stability(pinned, cfg_.nondeg).summary;
            }
            return nondegenerate_stability(graph(Side::Center), cfg_.nondeg).summary;
        }
        if (suite == "neighbor") {
            if (!gp_) return skipped("neighboring_wave", "neighbouring waves need the lattice model");
            WaveProfile q;
            if (!cfg_.neighbor_profile.empty()) {
                q = load_wave_profile(cfg_.neighbor_profile);
            } else {
                const Vec& c = gp_->profile().c;
                const double cn = c.norm();
                Vec dir = cn > 0.0 ? Vec(c / cn) : Vec(Vec::Unit(c.size(), 0));
                q = neighbor_profile(gp_->profile(), c + cfg_.velocity_shift * dir);
            }
            const GraphFn* cu = hyperbolic ? &graph(Side::Cu) : nullptr;
            const GraphFn* cs = hyperbolic ? &graph(Side::Cs) : nullptr;
            return neighboring_wave_membership(*gp_, q, cfg_.params, cu, cs, cfg_.neighbor).summary;
        }
        throw ParameterError("unknown suite: " + suite);
    }
};

}  // namespace

SuiteResult run_suite(const std::string& suite, const SuiteConfig& cfg, const std::string& artifact_stem) {
    Runner runner(cfg);
    SuiteResult out;
    if (suite == "all") {
        for (const std::string& s : suite_names()) out.reports.push_back(runner.run(s, artifact_stem));
    } else {
        const auto& names = suite_names();
        if (std::find(names.begin(), names.end(), suite) == names.end())
            throw ParameterError("unknown suite: " + suite);
        out.reports.push_back(runner.run(suite, artifact_stem));
    }
    return out;
}

}  // namespace imk
