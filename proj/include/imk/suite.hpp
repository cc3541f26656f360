#pragma once

#include "imk/harness.hpp"

#include <string>
#include <vector>

namespace imk {

/// Settings of a verification run, read from a YAML file with the sections
/// system, cutoff, graphs, integrator, attraction, ejection, tube, nondeg and neighbor.
struct SuiteConfig {
    /// toy-quadratic, toy-coupled, toy-hamiltonian or gp
    std::string system = "toy-hamiltonian";
    double lambda = 1.0, omega = 2.0, kappa = 1.0;
    /// Lattice runs: saved wave profile and decomposition tolerance.
    std::string profile;
    double decompose_tol = 1e-6;

    CutoffParams params{1e-2, 0.1, 4.0, 0.25};

    int graph_points = 9;
    int graph_modes = 2;
    SolverConfig solver;
    /// Precomputed graph files; solved on demand when empty.
    std::string cu_graph, cs_graph;

    RateExperiment rates;
    EnsembleSpec attraction{8, 1e-5, 1e-3, 1e-3, 1};
    EnsembleSpec ejection{8, 1e-5, 1e-3, 1e-5, 2};
    double attraction_horizon = 0.0, ejection_horizon = 0.0;

    CandidateSpec candidates;
    TubeConfig tube;

    NondegConfig nondeg;

    NeighborConfig neighbor;
    double velocity_shift = 1e-3;
    /// Neighbouring profile file; Newton-solved from the base profile when empty.
    std::string neighbor_profile;

    SuiteConfig();
};

SuiteConfig parse_suite_config(const std::string& yaml_text);
SuiteConfig load_suite_config(const std::string& path);

const std::vector<std::string>& suite_names();

struct SuiteResult {
    std::vector<ExperimentReport> reports;
    /// Every report that ran passed (skipped reports do not count against it).
    bool pass() const;
    nlohmann::json to_json() const;
};

/// Runs one suite (attraction, ejection, tube, neighbor, nondeg) or all of them.
/// When `artifact_stem` is non-empty, distance traces go to `<stem>_<scenario>.csv`.
SuiteResult run_suite(const std::string& suite, const SuiteConfig& cfg, const std::string& artifact_stem = "");

}  // namespace imk
