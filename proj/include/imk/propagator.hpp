#pragma once

#include "imk/bundle.hpp"
#include "imk/errors.hpp"

#include <functional>
#include <string>
#include <vector>

namespace imk {

enum class Scheme { Rk4, Lawson };
Scheme parse_scheme(const std::string& s);

struct IntegratorConfig {
    double dt = 1e-3;
    /// Lawson: integrating-factor RK4 with the stiff part exponentiated exactly.
    Scheme scheme = Scheme::Lawson;
    double horizon = 1.0;
    /// Record every n-th step (the last step is always recorded).
    int record_every = 1;
    /// States with a larger max-norm abort the run.
    double blowup = 1e6;
    void validate() const;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec> x;
};

struct TrajectoryDivergence : Divergence {
    TrajectoryDivergence(const std::string& what, Trajectory partial)
        : Divergence(what), trajectory(std::move(partial)) {}
    Trajectory trajectory;
};

using VecField = std::function<Vec(double, const Vec&)>;
/// x -> exp(t A) x for the stiff linear part A.
using LinearFlow = std::function<Vec(double, const Vec&)>;

/// One classical RK4 step of x' = f(t, x).
Vec rk4_step(const VecField& f, double t, const Vec& x, double h);
/// One Lawson RK4 step of x' = A x + N(t, x) given exp(tA) and N.
Vec lawson_step(const VecField& N, const LinearFlow& E, double t, const Vec& x, double h);

/// Fixed-step integration from t0 to t1 (t1 < t0 steps backward). For Lawson the
/// field passed is the non-stiff remainder N and `E` the stiff flow; for RK4 `E`
/// is ignored and `f` is the full field.
Trajectory integrate(const VecField& f, const LinearFlow& E, const Vec& x0, double t0, double t1,
                     const IntegratorConfig& cfg);

/// exp(t J L_inf) on a stacked lattice vector, with J L_inf having the per-mode symbol
/// i(c.k) + [[0, |k|^2], [-(|k|^2 + mass), 0]] (mass 2 for the linearisation at the
/// wave, 0 for the free traveling-frame flow).
Vec symbol_exponential(const Grid& g, const Vec& c, double mass, double t, const Vec& v);

/// Direct integration of the traveling-frame equation by Lawson RK4.
class GpDirectFlow {
public:
    GpDirectFlow(Grid g, Vec c) : grid_(std::move(g)), c_(std::move(c)) {}
    Field step(const Field& U, double dt) const;
    /// Returns samples every `record_every` steps over [0, horizon].
    std::vector<Field> evolve(const Field& U0, const IntegratorConfig& cfg, std::vector<double>* times = nullptr) const;
    /// Same over [0, t1]; t1 < 0 runs backward.
    std::vector<Field> evolve_to(const Field& U0, double t1, const IntegratorConfig& cfg,
                                 std::vector<double>* times = nullptr) const;

private:
    Grid grid_;
    Vec c_;
};

/// Direct integration of the linearised flow dV/dt = JL V at the wave (Lawson, stiff
/// part J L_inf exact). Returns the recorded states.
Trajectory linearized_flow(const LinOpSet& ops, const Vec& V0, const IntegratorConfig& cfg);

/// Least-squares slope of log|x(t)| on the window [t_lo, t_hi].
struct RateFit {
    double rate = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    int samples = 0;
};
RateFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& magnitude, double t_lo, double t_hi);

/// Translation path y(t) given by samples with derivatives, cubic Hermite in between.
class YPath {
public:
    YPath(std::vector<double> t, std::vector<Vec> y, std::vector<Vec> ydot);
    static YPath constant(const Vec& y, double t0, double t1);
    /// y(t) = y0 + t * v on [t0, t1].
    static YPath linear(const Vec& y0, const Vec& v, double t0, double t1);
    /// y(t) = y0 + amp * sin(freq t) along a direction.
    static YPath oscillating(const Vec& y0, const Vec& amp, double freq, double t0, double t1, int samples = 400);
    Vec at(double t) const;
    Vec rate(double t) const;
    /// sup |ydot|.
    double sigma() const;

private:
    std::vector<double> t_;
    std::vector<Vec> y_, v_;
    std::size_t locate(double t) const;
};

/// Solutions of the centre-fibre equation dV/dt = A_e(y) V + F(y)(ydot, V) + f(t).
struct LinearRun {
    Trajectory traj;
    /// (I - Pi^e_y) V along the run.
    std::vector<Vec> perp;
};

/// Homogeneous fibre flow S(t, s) V0.
Vec flow_S(const GpBundle& b, const YPath& path, double s, double t, const Vec& V0, const IntegratorConfig& cfg);
LinearRun duhamel_solve(const GpBundle& b, const YPath& path, double s, double t, const Vec& V0,
                        const VecField& forcing, const IntegratorConfig& cfg);
/// The finite-rank part alone: dW/dt = -D_y Pi^e(ydot) W + (I - Pi^e) f.
Trajectory integrate_perp(const GpBundle& b, const YPath& path, double s, double t, const Vec& W0,
                          const VecField& forcing, const IntegratorConfig& cfg);

/// <L_y V, V>.
double fibre_energy(const GpBundle& b, const Vec& y, const Vec& V);

enum class ReducedMode { Reduced, Cutoff };
ReducedMode parse_reduced_mode(const std::string& s);

struct ReducedTrajectory {
    std::vector<double> t;
    std::vector<BundlePoint> points;
    /// E + c.P of the chart image (reduced mode only; empty for the cut-off system).
    std::vector<double> energy;
};

/// Integrates any cut-off system with the Lawson scheme.
ReducedTrajectory integrate_cutoff(const CutoffSystem& sys, const CutoffParams& params, const BundlePoint& p0,
                                   const IntegratorConfig& cfg, double t0 = 0.0);

using BundleField = std::function<BundlePoint(const BundlePoint&)>;
/// Integrates an arbitrary autonomous field on the bundle coordinates from t0 to t1
/// (backward when t1 < t0); Lawson treats the system's stiff fibre part exactly.
ReducedTrajectory integrate_bundle_field(const CutoffSystem& sys, const BundleField& rhs, const BundlePoint& p0,
                                         double t1, const IntegratorConfig& cfg, double t0 = 0.0);

/// Integrates the lattice reduced system (or its cut-off modification).
ReducedTrajectory integrate_reduced(const GpBundle& b, const BundlePoint& p0, const IntegratorConfig& cfg,
                                    ReducedMode mode = ReducedMode::Reduced, const CutoffParams& params = {});

/// Constants of the linear estimates measured on one configuration.
struct LinearEstimateReport {
    /// sigma = 0: max relative drift of <L^e V, V> per unit time.
    double energy_drift = 0.0;
    /// sigma sweep: fitted growth exponent per sigma and its linear fit.
    std::vector<double> sigmas, exponents;
    double exponent_slope = 0.0, exponent_r2 = 0.0;
    /// eta sweep: largest observed forcing ratio per eta, and ratio * eta^{1/p}.
    std::vector<double> etas, prefactors, normalized;
    double p_tilde = 1.0;
    /// max |normalized / mean - 1|
    double normalized_spread = 0.0;
};

struct LinearEstimateScenario {
    std::vector<double> sigmas{0.0, 0.05, 0.1, 0.15, 0.2};
    std::vector<double> etas{0.1, 0.2, 0.4, 0.8};
    double p_tilde = 1.0;
    double horizon = 4.0;
    /// Forcing runs last this many e-folds of the slowest eta.
    double forcing_efolds = 6.0;
    int random_forcings = 2;
    unsigned seed = 7;
    IntegratorConfig integrator{5e-3, Scheme::Lawson, 1.0, 1, 1e6};
    /// Step of the sigma = 0 conservation run.
    double conservation_dt = 2.5e-3;
};

LinearEstimateReport measure_linear_estimate(const GpBundle& b, const LinearEstimateScenario& sc);

}  // namespace imk
