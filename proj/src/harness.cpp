#include "imk/harness.hpp"
#include "imk/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace imk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

double sup_vec(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double size_of(const CutoffSystem& sys, const BundlePoint& W) { return transverse_size(W, sys.fibre_norm(W.V)); }

double graph_distance(const GraphFn& h, const BundlePoint& W) { return sup_vec(h.dependent(W) - h.eval(W)); }

/// Runs an integration and keeps whatever was computed before a blow-up.
template <class F>
ReducedTrajectory guarded(const CutoffSystem& sys, F&& run) {
    try {
        return run();
    } catch (const TrajectoryDivergence& e) {
        ReducedTrajectory out;
        out.t = e.trajectory.t;
        for (const Vec& x : e.trajectory.x) out.points.push_back(unpack(x, sys.dims()));
        return out;
    }
}

ReducedTrajectory cutoff_orbit(const CutoffSystem& sys, const CutoffParams& params, const BundlePoint& W0, double t1,
                               const IntegratorConfig& cfg) {
    return guarded(sys, [&] {
        return integrate_bundle_field(sys, [&](const BundlePoint& p) { return sys.cutoff_rhs(p, params); }, W0, t1,
                                      cfg);
    });
}

enum class Trend { Decay, Growth };

/// One orbit: distance trace, tube exit and the log-linear fit on the clean window.
OrbitFit fit_orbit(const GraphFn& h, const ReducedTrajectory& tr, Trend trend, double lambda, double tube,
                   const RateExperiment& ex, DistanceTrace& trace) {
    const CutoffSystem& sys = h.system();
    OrbitFit of;
    std::size_t end = tr.points.size();
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
        if (!tr.points[i].finite() || size_of(sys, tr.points[i]) > tube) {
            end = i;
            of.truncated = true;
            of.exit_time = tr.t[i];
            break;
        }
        trace.t.push_back(tr.t[i]);
        trace.distance.push_back(graph_distance(h, tr.points[i]));
    }
    for (double d : trace.distance) of.max_distance = std::max(of.max_distance, d);

    const double t_start = tr.t.empty() ? 0.0 : tr.t.front() + 1.0 / lambda;
    std::vector<double> wt, wd;
    for (std::size_t i = 0; i < end; ++i) {
        const double t = trace.t[i], d = trace.distance[i];
        if (t < t_start) continue;
        if (d <= ex.floor) {
            if (trend == Trend::Decay) break;
            continue;
        }
        wt.push_back(t);
        wd.push_back(d);
    }
    of.fit = fit_log_rate(wt, wd, -kInf, kInf);
    of.fitted = of.fit.samples >= ex.min_samples;
    of.rate = trend == Trend::Decay ? -of.fit.rate : of.fit.rate;
    return of;
}

ExperimentReport rate_experiment(const std::string& scenario, const GraphFn& h, const GraphFn* closure,
                                 const std::vector<BundlePoint>& ensemble, const RateExperiment& ex, Trend trend) {
    const CutoffSystem& sys = h.system();
    const CutoffParams& params = h.params();
    const double lambda = sys.lambda();
    if (!(lambda > 0.0)) throw ParameterError("rate experiments need a positive spectral gap");
    const double T = ex.horizon > 0.0 ? ex.horizon : 15.0 / lambda;
    const double tube = ex.tube > 0.0 ? ex.tube : params.delta;

    ExperimentReport r;
    r.scenario = scenario;
    r.tolerance = ex.fit_tolerance;
    r.threshold = (lambda - 2.0 * params.eta) * (1.0 - ex.fit_tolerance);
    std::vector<double> rates;
    for (std::size_t k = 0; k < ensemble.size(); ++k) {
        if (size_of(sys, ensemble[k]) > tube) throw DomainError("ensemble member outside the tube");
        const ReducedTrajectory tr =
            closure ? integrate_on_graph(*closure, ensemble[k], T, ex.integrator)
                    : cutoff_orbit(sys, params, ensemble[k], T, ex.integrator);
        DistanceTrace trace;
        OrbitFit of = fit_orbit(h, tr, trend, lambda, tube, ex, trace);
        if (of.truncated)
            r.notes.push_back("orbit " + std::to_string(k) + " left the tube at t = " + std::to_string(of.exit_time));
        if (!of.fitted) r.notes.push_back("orbit " + std::to_string(k) + " has too few samples in the fit window");
        else rates.push_back(of.rate);
        r.orbits.push_back(of);
        r.traces.push_back(std::move(trace));
    }
    if (!rates.empty()) {
        r.rate_min = *std::min_element(rates.begin(), rates.end());
        double s = 0.0, s2 = 0.0;
        for (double x : rates) s += x;
        r.rate_mean = s / rates.size();
        for (double x : rates) s2 += (x - r.rate_mean) * (x - r.rate_mean);
        r.rate_std = rates.size() > 1 ? std::sqrt(s2 / (rates.size() - 1)) : 0.0;
    }
    double worst_residual = 0.0;
    for (const OrbitFit& of : r.orbits)
        if (of.fitted) worst_residual = std::max(worst_residual, of.fit.residual);
    r.metric("orbits", static_cast<double>(ensemble.size()));
    r.metric("fitted", static_cast<double>(rates.size()));
    r.metric("lambda", lambda);
    r.metric("eta", params.eta);
    r.metric("horizon", T);
    r.metric("worst_fit_residual", worst_residual);
    r.pass = !rates.empty() && r.rate_min >= r.threshold;
    return r;
}

/// Uniform coordinates: hyperbolic axes in [-hyperbolic, hyperbolic], the rest in [-fibre, fibre], pinned axes 0.
Vec uniform_coords(const GraphFn& h, std::mt19937_64& rng, double hyperbolic, double fibre) {
    const BlockDims d = h.system().dims();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec x = Vec::Zero(h.axes());
    const Eigen::Index head = d.d1 + d.d2;
    const Eigen::Index free_end = h.side() == Side::Center ? head : head + d.d;
    for (Eigen::Index a = 0; a < h.axes(); ++a) {
        if (h.points()[a] == 1) continue;
        const bool hyp = a >= head && a < free_end;
        x[a] = (hyp ? hyperbolic : fibre) * u(rng);
    }
    return x;
}

}  // namespace

double ExperimentReport::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
        if (k == name) return v;
    throw ParameterError("no metric named " + name);
}

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["status"] = status;
    if (!reason.empty()) j["reason"] = reason;
    j["pass"] = pass;
    j["threshold"] = threshold;
    j["tolerance"] = tolerance;
    j["rate"] = {{"min", rate_min}, {"mean", rate_mean}, {"std", rate_std}};
    nlohmann::json orbs = nlohmann::json::array();
    for (const OrbitFit& o : orbits)
        orbs.push_back({{"rate", o.rate},
                        {"fit_residual", o.fit.residual},
                        {"fit_samples", o.fit.samples},
                        {"fitted", o.fitted},
                        {"truncated", o.truncated},
                        {"exit_time", number_or_null(o.exit_time)},
                        {"max_distance", o.max_distance}});
    j["orbits"] = orbs;
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [k, v] : metrics) m[k] = number_or_null(v);
    j["metrics"] = m;
    j["notes"] = notes;
    j["artifacts"] = artifacts;
    j["details"] = details;
    return j;
}

void write_trace_csv(const std::string& path, const ExperimentReport& r) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.precision(17);
    os << "orbit,t,distance\n";
    for (std::size_t k = 0; k < r.traces.size(); ++k)
        for (std::size_t i = 0; i < r.traces[k].t.size(); ++i)
            os << k << ',' << r.traces[k].t[i] << ',' << r.traces[k].distance[i] << '\n';
}

std::vector<BundlePoint> graph_ensemble(const GraphFn& h, const EnsembleSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::bernoulli_distribution coin;
    const Vec y0 = Vec::Zero(h.system().dims().k);
    std::vector<BundlePoint> out;
    for (int k = 0; k < spec.samples; ++k) {
        BundlePoint W = h.point_at(uniform_coords(h, rng, spec.hyperbolic, spec.fibre), y0);
        Vec dep = h.dependent(W);
        for (auto& v : dep) v += coin(rng) ? spec.offset : -spec.offset;
        h.close(W, dep);
        out.push_back(std::move(W));
    }
    return out;
}

ReducedTrajectory integrate_on_graph(const GraphFn& h, const BundlePoint& p0, double t1, const IntegratorConfig& cfg) {
    const CutoffSystem& sys = h.system();
    const CutoffParams& params = h.params();
    const Vec zero = Vec::Zero(h.value_size());
    const BundleField rhs = [&](const BundlePoint& p) {
        BundlePoint q = p;
        h.close(q, h.eval(q));
        BundlePoint r = sys.cutoff_rhs(q, params);
        h.close(r, zero);
        return r;
    };
    BundlePoint start = p0;
    h.close(start, h.eval(start));
    ReducedTrajectory tr = guarded(sys, [&] { return integrate_bundle_field(sys, rhs, start, t1, cfg); });
    for (BundlePoint& p : tr.points)
        if (p.finite()) h.close(p, h.eval(p));
    return tr;
}

ExperimentReport measure_attraction_cu(const GraphFn& h_cu, const std::vector<BundlePoint>& ensemble,
                                       const RateExperiment& ex) {
    if (h_cu.side() != Side::Cu) throw ParameterError("attraction needs the cu graph");
    return rate_experiment("attraction_cu", h_cu, nullptr, ensemble, ex, Trend::Decay);
}

ExperimentReport measure_ejection_cs(const GraphFn& h_cs, const std::vector<BundlePoint>& ensemble,
                                     const RateExperiment& ex) {
    if (h_cs.side() != Side::Cs) throw ParameterError("ejection needs the cs graph");
    return rate_experiment("ejection_cs", h_cs, nullptr, ensemble, ex, Trend::Growth);
}

ExperimentReport measure_center_attraction(const GraphFn& h_cs, const GraphFn& h_c,
                                           const std::vector<BundlePoint>& ensemble, const RateExperiment& ex) {
    if (h_cs.side() != Side::Cs || h_c.side() != Side::Center)
        throw ParameterError("centre attraction needs the cs and centre graphs");
    return rate_experiment("center_attraction", h_c, &h_cs, ensemble, ex, Trend::Decay);
}

// ---------------------------------------------------------------- tube

std::vector<TubeCandidate> tube_candidates(const GraphFn& h_cu, const GraphFn& h_cs, const GraphFn& h_c,
                                           const CandidateSpec& spec) {
    const double r = spec.radius > 0.0 ? spec.radius : h_cu.params().delta / 16.0;
    if (spec.min_offset >= r / 4.0) throw ParameterError("min_offset must be well inside the candidate ball");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> mag(spec.min_offset, r / 4.0);
    std::bernoulli_distribution coin;
    const int d = h_cu.system().dims().d;
    const Vec y0 = Vec::Zero(h_cu.system().dims().k);
    auto signed_mag = [&] { return coin(rng) ? mag(rng) : -mag(rng); };
    /// Fibre and finite-centre coordinates of l1 size at most r / 2.
    auto centre_part = [&](const GraphFn& h) {
        Vec x = uniform_coords(h, rng, 0.0, 1.0);
        const double l1 = x.cwiseAbs().sum();
        if (l1 > 0.0) x *= 0.5 * r * std::uniform_real_distribution<double>(0.2, 1.0)(rng) / l1;
        return x;
    };
    auto hyperbolic_axis = [&](const GraphFn& h) { return h.system().dims().d1 + h.system().dims().d2; };

    std::vector<TubeCandidate> out;
    for (int i = 0; i < spec.samples; ++i) {
        TubeCandidate c;
        switch (i % 4) {
            case 0:
                c.kind = "centre";
                c.W = h_c.point_at(centre_part(h_c), y0);
                break;
            case 1:
            case 2: {
                const GraphFn& h = i % 4 == 1 ? h_cu : h_cs;
                c.kind = i % 4 == 1 ? "cu" : "cs";
                Vec x = centre_part(h);
                for (int j = 0; j < d; ++j) x[hyperbolic_axis(h) + j] = signed_mag();
                c.W = h.point_at(x, y0);
                break;
            }
            default: {
                c.kind = "off";
                Vec x = centre_part(h_cu);
                for (int j = 0; j < d; ++j) x[hyperbolic_axis(h_cu) + j] = signed_mag();
                c.W = h_cu.point_at(x, y0);
                Vec dep = h_cu.dependent(c.W);
                for (auto& v : dep) v += signed_mag();
                h_cu.close(c.W, dep);
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

TubeReport tube_characterization(const GraphFn& h_cu, const GraphFn& h_cs, const std::vector<TubeCandidate>& candidates,
                                 const TubeConfig& cfg) {
    if (h_cu.side() != Side::Cu || h_cs.side() != Side::Cs) throw ParameterError("expected a cu and a cs graph");
    const CutoffSystem& sys = h_cu.system();
    const CutoffParams& params = h_cu.params();
    const double T = cfg.horizon > 0.0 ? cfg.horizon : 8.0 / sys.lambda();
    const double tube = cfg.tube > 0.0 ? cfg.tube : params.delta;

    auto max_size = [&](const ReducedTrajectory& tr, double t_expected) {
        double m = 0.0;
        for (const BundlePoint& p : tr.points) m = std::max(m, p.finite() ? size_of(sys, p) : kInf);
        if (tr.t.empty() || std::abs(tr.t.back() - t_expected) > 1e-9 * std::max(1.0, std::abs(t_expected)))
            m = kInf;
        return m;
    };

    TubeReport rep;
    nlohmann::json rows = nlohmann::json::array();
    int centre_members = 0;
    for (const TubeCandidate& c : candidates) {
        Classification cl;
        cl.kind = c.kind;
        cl.max_size_backward = max_size(cutoff_orbit(sys, params, c.W, -T, cfg.integrator), -T);
        cl.max_size_forward = max_size(cutoff_orbit(sys, params, c.W, T, cfg.integrator), T);
        cl.tube_cu = cl.max_size_backward <= tube;
        cl.tube_cs = cl.max_size_forward <= tube;
        cl.distance_cu = graph_distance(h_cu, c.W);
        cl.distance_cs = graph_distance(h_cs, c.W);
        cl.graph_cu = cl.distance_cu <= cfg.graph_tol;
        cl.graph_cs = cl.distance_cs <= cfg.graph_tol;
        if (!cl.agree()) ++rep.disagreements;
        if (cl.center()) ++centre_members;
        rows.push_back({{"kind", cl.kind},
                        {"tube_cu", cl.tube_cu},
                        {"tube_cs", cl.tube_cs},
                        {"graph_cu", cl.graph_cu},
                        {"graph_cs", cl.graph_cs},
                        {"distance_cu", cl.distance_cu},
                        {"distance_cs", cl.distance_cs},
                        {"max_size_backward", number_or_null(cl.max_size_backward)},
                        {"max_size_forward", number_or_null(cl.max_size_forward)}});
        rep.rows.push_back(cl);
    }
    ExperimentReport& s = rep.summary;
    s.scenario = "tube_characterization";
    s.tolerance = cfg.graph_tol;
    s.metric("candidates", static_cast<double>(candidates.size()));
    s.metric("disagreements", rep.disagreements);
    s.metric("centre_members", centre_members);
    s.metric("horizon", T);
    s.metric("tube", tube);
    s.details["rows"] = rows;
    s.pass = rep.disagreements == 0;
    return rep;
}

// ---------------------------------------------------------------- non-degenerate case

nlohmann::json NondegeneracyCheck::to_json() const {
    return {{"d", d},           {"d1", d1},         {"d2", d2},
            {"dim_ker", dim_ker}, {"translations", translations}, {"n_minus", n_minus},
            {"negative", negative}, {"near_zero", near_zero}, {"h1", h1},
            {"h2", h2},         {"reason", reason}};
}

NondegeneracyCheck check_nondegeneracy(const Decomposition& dec, double tol) {
    NondegeneracyCheck c;
    c.d = dec.d;
    c.d1 = dec.d1;
    c.d2 = dec.d2;
    c.dim_ker = dec.dim_ker;
    c.translations = dec.translations;
    c.n_minus = dec.n_minus;
    const Mat& L = dec.space->L;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (L + L.transpose()), Eigen::EigenvaluesOnly);
    Vec mu = es.eigenvalues();
    const double scale = std::max(mu.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<double> small;
    for (double m : mu) {
        if (std::abs(m) <= tol * scale) small.push_back(m);
        else if (m < 0.0) ++c.negative;
    }
    std::sort(small.begin(), small.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (std::size_t i = static_cast<std::size_t>(std::max(0, c.dim_ker)); i < small.size(); ++i)
        c.near_zero.push_back(small[i]);
    c.h1 = c.d1 == 0 && c.d2 == 0 && c.dim_ker == c.translations;
    c.h2 = c.d == c.negative;
    std::ostringstream why;
    if (c.d1 != 0 || c.d2 != 0) why << "d1 = " << c.d1 << ", d2 = " << c.d2 << "; ";
    if (c.dim_ker != c.translations)
        why << "kernel dimension " << c.dim_ker << " exceeds " << c.translations << " translation direction(s); ";
    if (!c.h2) why << "d = " << c.d << " but L has " << c.negative << " negative eigenvalue(s); ";
    if (!c.near_zero.empty()) why << c.near_zero.size() << " undecided near-zero eigenvalue(s); ";
    c.reason = why.str();
    if (c.reason.size() >= 2) c.reason.resize(c.reason.size() - 2);
    return c;
}

NondegReport nondegenerate_stability(const GraphFn& h_c, const NondegConfig& cfg) {
    if (h_c.side() != Side::Center) throw ParameterError("the stability check runs on the centre graph");
    const CutoffSystem& sys = h_c.system();
    const CutoffParams& params = h_c.params();
    NondegReport rep;
    ExperimentReport& s = rep.summary;
    s.scenario = "nondegenerate_stability";
    s.tolerance = cfg.slope_tol;
    if (const auto* gp = dynamic_cast<const GpBundle*>(&sys))
        s.details["nondegeneracy"] = check_nondegeneracy(gp->decomposition()).to_json();
    if (!sys.nondegenerate()) {
        s.status = "skipped";
        s.reason = s.details.contains("nondegeneracy") ? s.details["nondegeneracy"]["reason"].get<std::string>()
                                                       : "the system is degenerate";
        return rep;
    }
    if (!sys.has_energy()) {
        s.status = "skipped";
        s.reason = "the system carries no energy functional";
        return rep;
    }
    if (h_c.modes() == 0) throw ParameterError("the centre graph needs at least one fibre mode");
    const BlockDims d = sys.dims();
    const Vec y0 = Vec::Zero(d.k);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> n01;

    BundlePoint dir = BundlePoint::zero(d);
    for (auto& v : dir.a_plus) v = n01(rng);
    for (auto& v : dir.a_minus) v = n01(rng);
    Vec xi(h_c.modes());
    for (auto& v : xi) v = n01(rng);
    dir.V = sys.from_reference(y0, h_c.directions() * xi);
    dir = (1.0 / size_of(sys, dir)) * dir;

    s.metric("energy_at_base", sys.energy_excess(BundlePoint::zero(d)));
    const int n = std::max(2, cfg.amplitudes);
    for (int i = 0; i < n; ++i) {
        const double eps = cfg.amp_lo * std::pow(cfg.amp_hi / cfg.amp_lo, static_cast<double>(i) / (n - 1));
        const BundlePoint W = eps * dir;
        rep.amplitudes.push_back(eps);
        rep.residuals.push_back(std::abs(sys.energy_excess(W) - sys.energy_quadratic(W)));
    }
    std::vector<double> logs;
    for (double a : rep.amplitudes) logs.push_back(std::log(a));
    const RateFit fit = fit_log_rate(logs, rep.residuals, -kInf, kInf);
    rep.slope = fit.rate;
    rep.energy_pass = fit.samples == n && std::abs(rep.slope - 3.0) <= cfg.slope_tol;
    s.metric("energy_slope", rep.slope);
    s.metric("energy_fit_residual", fit.residual);

    for (auto& v : xi) v = n01(rng);
    xi *= params.delta / (cfg.C * cfg.C) / xi.norm();
    Vec coords = Vec::Zero(h_c.axes());
    coords.tail(h_c.modes()) = xi;
    const BundlePoint W0 = h_c.point_at(coords, y0);
    rep.initial_size = size_of(sys, W0);
    rep.tube = params.delta / 15.0;
    rep.horizon = cfg.efolds / sys.lambda();
    const ReducedTrajectory tr = integrate_on_graph(h_c, W0, rep.horizon, cfg.integrator);
    DistanceTrace trace;
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
        const double sz = tr.points[i].finite() ? size_of(sys, tr.points[i]) : kInf;
        rep.max_size = std::max(rep.max_size, sz);
        trace.t.push_back(tr.t[i]);
        trace.distance.push_back(sz);
    }
    const bool completed = !tr.t.empty() && std::abs(tr.t.back() - rep.horizon) < 1e-9 * rep.horizon;
    rep.orbit_pass = completed && rep.max_size < rep.tube;
    s.traces.push_back(std::move(trace));
    s.metric("initial_size", rep.initial_size);
    s.metric("max_size", rep.max_size);
    s.metric("tube", rep.tube);
    s.metric("horizon", rep.horizon);
    s.notes.push_back("confinement checked over the finite horizon " + std::to_string(rep.horizon));
    s.pass = rep.energy_pass && rep.orbit_pass;
    return rep;
}

// ---------------------------------------------------------------- neighbouring waves

WaveProfile neighbor_profile(const WaveProfile& base, const Vec& c, double boundary_tol) {
    NewtonOptions o;
    o.boundary_tol = boundary_tol;
    return solve_traveling_wave(c, base.U, o);
}

NeighborReport neighboring_wave_membership(const GpBundle& b, const WaveProfile& neighbor, const CutoffParams& params,
                                           const GraphFn* h_cu, const GraphFn* h_cs, const NeighborConfig& cfg) {
    const Vec& c = b.profile().c;
    const Vec& c2 = neighbor.c;
    if (c2.size() != c.size() || neighbor.U.grid.dims != b.grid().dims || neighbor.U.grid.lengths != b.grid().lengths)
        throw ShapeError("the neighbouring wave lives on a different grid");
    const double cn = c.norm();
    if (cn > 0.0) {
        const Vec along = c2 - (c2.dot(c) / (cn * cn)) * c;
        if (along.norm() > 1e-12 * std::max(1.0, c2.norm())) throw DomainError("velocities are not parallel");
    } else if (c2.norm() > 0.0) {
        throw DomainError("velocities are not parallel");
    }
    const double delta0 = cfg.delta0 > 0.0 ? cfg.delta0 : params.delta;
    const double tube = cfg.tube > 0.0 ? cfg.tube : params.delta;
    const int k = b.dims().k;

    BundlePoint W0;
    try {
        W0 = b.chart_inverse(neighbor.U, Vec::Zero(k));
    } catch (const OutOfChart&) {
        throw DomainError("the neighbouring wave is outside the chart");
    }
    NeighborReport rep;
    rep.initial_size = size_of(b, W0);
    if (rep.initial_size > delta0)
        throw DomainError("waves are " + std::to_string(rep.initial_size) + " apart, above delta0 = " +
                          std::to_string(delta0));

    const GpDirectFlow flow(b.grid(), c);
    auto sweep = [&](double t1, std::vector<double>& ts, std::vector<double>& sizes) {
        std::vector<double> times;
        const std::vector<Field> us = flow.evolve_to(neighbor.U, t1, cfg.integrator, &times);
        Vec y = W0.y;
        double worst = 0.0;
        for (std::size_t i = 0; i < us.size(); ++i) {
            double sz = kInf;
            try {
                const BundlePoint W = b.chart_inverse(us[i], y);
                y = W.y;
                sz = size_of(b, W);
            } catch (const OutOfChart&) {
            }
            ts.push_back(times[i]);
            sizes.push_back(sz);
            worst = std::max(worst, sz);
            if (!std::isfinite(sz)) break;
        }
        return worst;
    };
    std::vector<double> tb, sb, tf, sf;
    rep.max_size_backward = sweep(-cfg.horizon, tb, sb);
    rep.max_size_forward = sweep(cfg.horizon, tf, sf);
    for (std::size_t i = sb.size(); i-- > 1;) {
        rep.trace.t.push_back(tb[i]);
        rep.trace.distance.push_back(sb[i]);
    }
    rep.trace.t.insert(rep.trace.t.end(), tf.begin(), tf.end());
    rep.trace.distance.insert(rep.trace.distance.end(), sf.begin(), sf.end());

    rep.member_cu = rep.max_size_backward <= tube;
    rep.member_cs = rep.max_size_forward <= tube;
    rep.member_c = rep.member_cu && rep.member_cs;

    ExperimentReport& s = rep.summary;
    s.scenario = "neighboring_wave";
    s.tolerance = cfg.graph_tol;
    bool consistent = true;
    if (b.dims().d > 0) {
        if (h_cu && h_cs) {
            rep.distance_cu = graph_distance(*h_cu, W0);
            rep.distance_cs = graph_distance(*h_cs, W0);
            consistent = (rep.distance_cu <= cfg.graph_tol) == rep.member_cu &&
                         (rep.distance_cs <= cfg.graph_tol) == rep.member_cs;
            if (!consistent) s.notes.push_back("tube membership disagrees with the graph distances");
        } else {
            s.notes.push_back("graph cross-check skipped: no graphs supplied");
        }
    } else {
        s.notes.push_back("d = 0: the cu, cs and centre manifolds coincide with the tube");
    }
    s.metric("velocity_shift", (c2 - c).norm());
    s.metric("initial_size", rep.initial_size);
    s.metric("delta0", delta0);
    s.metric("max_size_backward", rep.max_size_backward);
    s.metric("max_size_forward", rep.max_size_forward);
    s.metric("distance_cu", rep.distance_cu);
    s.metric("distance_cs", rep.distance_cs);
    s.metric("horizon", cfg.horizon);
    s.details["member"] = {{"cu", rep.member_cu}, {"cs", rep.member_cs}, {"c", rep.member_c}};
    s.traces.push_back(rep.trace);
    s.pass = rep.member_c && consistent;
    return rep;
}

}  // namespace imk
