#pragma once

#include "imk/manifold.hpp"
#include "imk/propagator.hpp"

#include <json.hpp>

#include <limits>
#include <string>
#include <vector>

namespace imk {

struct DistanceTrace {
    std::vector<double> t, distance;
};

/// Exponential fit of one orbit's distance to a graph.
struct OrbitFit {
    RateFit fit;
    /// Decay rate for attraction, growth rate for ejection.
    double rate = 0.0;
    bool fitted = false;
    bool truncated = false;
    double exit_time = std::numeric_limits<double>::quiet_NaN();
    double max_distance = 0.0;
};

struct ExperimentReport {
    std::string scenario;
    /// "ok" or "skipped"
    std::string status = "ok";
    std::string reason;
    std::vector<OrbitFit> orbits;
    double rate_min = 0.0, rate_mean = 0.0, rate_std = 0.0;
    /// Declared requirement: every fitted rate must reach `threshold`.
    double threshold = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    /// Scalar diagnostics by name.
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::string> notes;
    std::vector<std::string> artifacts;
    std::vector<DistanceTrace> traces;
    /// Scenario-specific tables.
    nlohmann::json details = nlohmann::json::object();

    void metric(const std::string& name, double value) { metrics.emplace_back(name, value); }
    double metric(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// time,distance rows per orbit (log-scale plotting data).
void write_trace_csv(const std::string& path, const ExperimentReport& r);

/// Random points near a graph: free coordinates uniform in [-hyperbolic, hyperbolic]
/// on the hyperbolic axes and [-fibre, fibre] on the fibre axes, graph values filled
/// in, then the dependent block moved by `offset` along a random sign pattern.
struct EnsembleSpec {
    int samples = 20;
    double hyperbolic = 1e-5;
    double fibre = 1e-3;
    double offset = 1e-3;
    unsigned seed = 1;
};
std::vector<BundlePoint> graph_ensemble(const GraphFn& h, const EnsembleSpec& spec);

struct RateExperiment {
    /// 0 selects 15 / lambda.
    double horizon = 0.0;
    IntegratorConfig integrator{0.01, Scheme::Lawson, 1.0, 1, 1e6};
    double fit_tolerance = 0.1;
    /// Distances below this are excluded from fits.
    double floor = 1e-10;
    /// Tube radius; 0 selects delta.
    double tube = 0.0;
    int min_samples = 5;
};

/// Forward orbits of the cut-off system; fits |a_minus - h_cu(W(t))| to C exp(-rho t)
/// and requires rho >= (lambda - 2 eta)(1 - fit_tolerance). Orbits are cut at tube exit.
ExperimentReport measure_attraction_cu(const GraphFn& h_cu, const std::vector<BundlePoint>& ensemble,
                                       const RateExperiment& ex);
/// Growth of |a_plus - h_cs(W(t))| under the forward flow.
ExperimentReport measure_ejection_cs(const GraphFn& h_cs, const std::vector<BundlePoint>& ensemble,
                                     const RateExperiment& ex);
/// Orbits on the cs graph (closed by h_cs) approaching the centre graph.
ExperimentReport measure_center_attraction(const GraphFn& h_cs, const GraphFn& h_c,
                                           const std::vector<BundlePoint>& ensemble, const RateExperiment& ex);

/// Flow of the cut-off system restricted to a graph: the dependent block is
/// re-evaluated from h at every stage. t1 < 0 runs backward.
ReducedTrajectory integrate_on_graph(const GraphFn& h, const BundlePoint& p0, double t1, const IntegratorConfig& cfg);

struct TubeCandidate {
    BundlePoint W;
    /// centre, cu, cs or off
    std::string kind;
};

struct CandidateSpec {
    int samples = 50;
    /// Ball radius of the free coordinates; 0 selects delta / 16.
    double radius = 0.0;
    /// Smallest hyperbolic coordinate for cu / cs points and smallest off-graph offset.
    double min_offset = 1e-4;
    unsigned seed = 11;
};
/// A mix of centre-graph points, cu and cs graph points and off-graph points.
std::vector<TubeCandidate> tube_candidates(const GraphFn& h_cu, const GraphFn& h_cs, const GraphFn& h_c,
                                           const CandidateSpec& spec);

struct TubeConfig {
    /// 0 selects 8 / lambda.
    double horizon = 0.0;
    IntegratorConfig integrator{0.01, Scheme::Lawson, 1.0, 1, 1e6};
    double tube = 0.0;
    double graph_tol = 1e-5;
};

struct Classification {
    std::string kind;
    bool tube_cu = false, tube_cs = false;
    bool graph_cu = false, graph_cs = false;
    double distance_cu = 0.0, distance_cs = 0.0;
    double max_size_backward = 0.0, max_size_forward = 0.0;
    bool agree() const { return tube_cu == graph_cu && tube_cs == graph_cs; }
    bool center() const { return tube_cu && tube_cs; }
};

struct TubeReport {
    ExperimentReport summary;
    std::vector<Classification> rows;
    int disagreements = 0;
};

/// Membership by the tube criterion (backward orbit stays in the tube for cu, forward
/// for cs), cross-checked against the graph distances.
TubeReport tube_characterization(const GraphFn& h_cu, const GraphFn& h_cs, const std::vector<TubeCandidate>& candidates,
                                 const TubeConfig& cfg);

/// Counts behind the non-degeneracy conditions. near_zero lists eigenvalues of L
/// with |mu| <= tol ||L|| beyond the kernel, left undecided.
struct NondegeneracyCheck {
    int d = 0, d1 = 0, d2 = 0, dim_ker = 0, translations = 0, n_minus = 0;
    int negative = 0;
    std::vector<double> near_zero;
    /// d1 = d2 = 0 and the kernel consists of translations.
    bool h1 = false;
    /// d equals the number of negative eigenvalues of L.
    bool h2 = false;
    std::string reason;
    nlohmann::json to_json() const;
};
NondegeneracyCheck check_nondegeneracy(const Decomposition& dec, double tol = 1e-8);

struct NondegConfig {
    double amp_lo = 1e-4, amp_hi = 1e-2;
    int amplitudes = 9;
    double slope_tol = 0.2;
    /// Centre orbits start at fibre size delta / C^2.
    double C = 4.0;
    /// Horizon in units of 1 / lambda.
    double efolds = 100.0;
    IntegratorConfig integrator{0.02, Scheme::Lawson, 1.0, 10, 1e6};
    unsigned seed = 5;
};

struct NondegReport {
    ExperimentReport summary;
    std::vector<double> amplitudes, residuals;
    double slope = 0.0;
    double initial_size = 0.0, max_size = 0.0, tube = 0.0, horizon = 0.0;
    bool energy_pass = false, orbit_pass = false;
};

/// Cubic scaling of the energy remainder along a fixed direction, and confinement
/// of a centre-manifold orbit to the delta / 15 tube. Skipped when the system is
/// degenerate or carries no energy.
NondegReport nondegenerate_stability(const GraphFn& h_c, const NondegConfig& cfg);

/// Newton-solved neighbour of `base` at velocity c, seeded with the base profile
/// on the same box.
WaveProfile neighbor_profile(const WaveProfile& base, const Vec& c, double boundary_tol = 1e-2);

struct NeighborConfig {
    /// Precondition radius; 0 selects delta.
    double delta0 = 0.0;
    double tube = 0.0;
    double horizon = 20.0;
    IntegratorConfig integrator{0.01, Scheme::Lawson, 1.0, 50, 1e6};
    double graph_tol = 1e-5;
};

struct NeighborReport {
    ExperimentReport summary;
    double initial_size = 0.0, max_size_forward = 0.0, max_size_backward = 0.0;
    double distance_cu = 0.0, distance_cs = 0.0;
    bool member_cu = false, member_cs = false, member_c = false;
    DistanceTrace trace;
};

/// Follows the second wave under the traveling-frame flow of the first, both ways in
/// time, reading bundle coordinates along the orbit. Throws DomainError when the
/// waves are not parallel or lie further than delta0 apart. Graphs are optional
/// (they are required only when d > 0).
NeighborReport neighboring_wave_membership(const GpBundle& b, const WaveProfile& neighbor, const CutoffParams& params,
                                           const GraphFn* h_cu, const GraphFn* h_cs, const NeighborConfig& cfg);

}  // namespace imk
