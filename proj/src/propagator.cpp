#include "imk/propagator.hpp"

#include "imk/fourier.hpp"
#include "imk/gp_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace imk {

Scheme parse_scheme(const std::string& s) {
    if (s == "rk4" || s == "explicit-RK4") return Scheme::Rk4;
    if (s == "lawson" || s == "semi-implicit-splitting") return Scheme::Lawson;
    throw ParameterError("unknown scheme '" + s + "'");
}

ReducedMode parse_reduced_mode(const std::string& s) {
    if (s == "reduced") return ReducedMode::Reduced;
    if (s == "cutoff" || s == "cutoff-cu" || s == "cutoff-cs") return ReducedMode::Cutoff;
    throw ParameterError("unknown integration mode '" + s + "'");
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("time step must be positive");
    if (record_every < 1) throw ParameterError("record_every must be at least 1");
    if (!(horizon >= 0.0)) throw ParameterError("horizon must be non-negative");
}

Vec rk4_step(const VecField& f, double t, const Vec& x, double h) {
    const Vec k1 = f(t, x);
    const Vec k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec k4 = f(t + h, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec lawson_step(const VecField& N, const LinearFlow& E, double t, const Vec& x, double h) {
    const double h2 = 0.5 * h;
    const Vec a = N(t, x);
    const Vec Ex = E(h2, x);
    const Vec b = N(t + h2, E(h2, Vec(x + h2 * a)));
    const Vec c = N(t + h2, Ex + h2 * b);
    const Vec d = N(t + h, E(h, x) + h * E(h2, c));
    return E(h, Vec(x + (h / 6.0) * a)) + (h / 3.0) * E(h2, Vec(b + c)) + (h / 6.0) * d;
}

Trajectory integrate(const VecField& f, const LinearFlow& E, const Vec& x0, double t0, double t1,
                     const IntegratorConfig& cfg) {
    cfg.validate();
    const double span = t1 - t0;
    const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / cfg.dt - 1e-9)));
    const double h = span / static_cast<double>(steps);
    Trajectory tr;
    tr.t.push_back(t0);
    tr.x.push_back(x0);
    Vec x = x0;
    for (long n = 0; n < steps; ++n) {
        const double t = t0 + static_cast<double>(n) * h;
        x = cfg.scheme == Scheme::Lawson && E ? lawson_step(f, E, t, x, h) : rk4_step(f, t, x, h);
        const bool last = n + 1 == steps;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > cfg.blowup) {
            tr.t.push_back(t + h);
            tr.x.push_back(x);
            throw TrajectoryDivergence("state exceeded the blow-up threshold at t = " + std::to_string(t + h), tr);
        }
        if (last || (n + 1) % cfg.record_every == 0) {
            tr.t.push_back(last ? t1 : t + h);
            tr.x.push_back(x);
        }
    }
    return tr;
}

Vec symbol_exponential(const Grid& g, const Vec& c, double mass, double t, const Vec& v) {
    auto F = fourier_for(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    const CArray fr = F->forward(v.head(n).array());
    const CArray fi = F->forward(v.tail(n).array());
    Eigen::ArrayXd ck = Eigen::ArrayXd::Zero(F->spectrum_size());
    for (int a = 0; a < g.spatial_dim(); ++a)
        if (c[a] != 0.0) ck += c[a] * F->kd(a);
    const Eigen::ArrayXd& k2 = F->k2();
    CArray gr(fr.size()), gi(fi.size());
    for (Eigen::Index s = 0; s < fr.size(); ++s) {
        const double a = k2[s], b = k2[s] + mass;
        const double w = std::sqrt(a * b);
        const double C = std::cos(w * t);
        const double S = w > 0.0 ? std::sin(w * t) / w : t;
        const cplx ph = std::polar(1.0, t * ck[s]);
        gr[s] = ph * (C * fr[s] + a * S * fi[s]);
        gi[s] = ph * (-b * S * fr[s] + C * fi[s]);
    }
    Vec out(2 * n);
    out.head(n) = F->backward(gr).matrix();
    out.tail(n) = F->backward(gi).matrix();
    return out;
}

namespace {

Vec gp_nonlinear_part(const Grid& g, const Vec& x) {
    const auto n = static_cast<Eigen::Index>(g.size());
    const Eigen::ArrayXd re = x.head(n).array(), im = x.tail(n).array();
    const Eigen::ArrayXd nl = 1.0 - re.square() - im.square();
    Vec out(2 * n);
    out.head(n) = (-nl * im).matrix();
    out.tail(n) = (nl * re).matrix();
    return out;
}

}  // namespace

Field GpDirectFlow::step(const Field& U, double dt) const {
    const Grid& g = grid_;
    const VecField N = [&g](double, const Vec& x) { return gp_nonlinear_part(g, x); };
    const LinearFlow E = [this](double t, const Vec& x) { return symbol_exponential(grid_, c_, 0.0, t, x); };
    return unstack(g, lawson_step(N, E, 0.0, stack(U), dt));
}

std::vector<Field> GpDirectFlow::evolve(const Field& U0, const IntegratorConfig& cfg, std::vector<double>* times) const {
    return evolve_to(U0, cfg.horizon, cfg, times);
}

std::vector<Field> GpDirectFlow::evolve_to(const Field& U0, double t1, const IntegratorConfig& cfg,
                                           std::vector<double>* times) const {
    const Grid& g = grid_;
    const VecField N = [&g](double, const Vec& x) { return gp_nonlinear_part(g, x); };
    const LinearFlow E = [this](double t, const Vec& x) { return symbol_exponential(grid_, c_, 0.0, t, x); };
    IntegratorConfig c = cfg;
    c.scheme = Scheme::Lawson;
    const Trajectory tr = integrate(N, E, stack(U0), 0.0, t1, c);
    std::vector<Field> out;
    out.reserve(tr.x.size());
    for (const Vec& x : tr.x) out.push_back(unstack(g, x));
    if (times) *times = tr.t;
    return out;
}

Trajectory linearized_flow(const LinOpSet& ops, const Vec& V0, const IntegratorConfig& cfg) {
    const Grid& g = ops.grid();
    const VecField N = [&](double, const Vec& x) { return stack(ops.apply_Q(unstack(g, x))); };
    const LinearFlow E = [&](double t, const Vec& x) { return symbol_exponential(g, ops.velocity(), 2.0, t, x); };
    IntegratorConfig c = cfg;
    c.scheme = Scheme::Lawson;
    return integrate(N, E, V0, 0.0, cfg.horizon, c);
}

RateFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& m, double t_lo, double t_hi) {
    RateFit fit;
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size() && i < m.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi || !(m[i] > 0.0)) continue;
        const double y = std::log(m[i]);
        st += t[i];
        sy += y;
        stt += t[i] * t[i];
        sty += t[i] * y;
        ++n;
    }
    fit.samples = n;
    if (n < 2) return fit;
    const double den = n * stt - st * st;
    if (den == 0.0) return fit;
    fit.rate = (n * sty - st * sy) / den;
    fit.intercept = (sy - fit.rate * st) / n;
    double r = 0.0;
    for (std::size_t i = 0; i < t.size() && i < m.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi || !(m[i] > 0.0)) continue;
        r = std::max(r, std::abs(std::log(m[i]) - fit.intercept - fit.rate * t[i]));
    }
    fit.residual = r;
    return fit;
}

// ---------------------------------------------------------------- paths

YPath::YPath(std::vector<double> t, std::vector<Vec> y, std::vector<Vec> ydot)
    : t_(std::move(t)), y_(std::move(y)), v_(std::move(ydot)) {
    if (t_.size() < 2 || y_.size() != t_.size() || v_.size() != t_.size())
        throw ShapeError("path needs at least two samples with matching derivative samples");
    for (std::size_t i = 1; i < t_.size(); ++i)
        if (!(t_[i] > t_[i - 1])) throw ParameterError("path sample times must increase");
}

YPath YPath::constant(const Vec& y, double t0, double t1) {
    const Vec z = Vec::Zero(y.size());
    return YPath({std::min(t0, t1), std::max(t0, t1)}, {y, y}, {z, z});
}

YPath YPath::linear(const Vec& y0, const Vec& v, double t0, double t1) {
    const double a = std::min(t0, t1), b = std::max(t0, t1);
    return YPath({a, b}, {Vec(y0 + a * v), Vec(y0 + b * v)}, {v, v});
}

YPath YPath::oscillating(const Vec& y0, const Vec& amp, double freq, double t0, double t1, int samples) {
    const double a = std::min(t0, t1), b = std::max(t0, t1);
    std::vector<double> t;
    std::vector<Vec> y, v;
    for (int i = 0; i <= samples; ++i) {
        const double s = a + (b - a) * i / samples;
        t.push_back(s);
        y.push_back(y0 + std::sin(freq * s) * amp);
        v.push_back(freq * std::cos(freq * s) * amp);
    }
    return YPath(std::move(t), std::move(y), std::move(v));
}

std::size_t YPath::locate(double t) const {
    if (t < t_.front() - 1e-12 || t > t_.back() + 1e-12) throw DomainError("time outside the path's sample range");
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const auto i = static_cast<std::size_t>(std::distance(t_.begin(), it));
    return std::clamp<std::size_t>(i, 1, t_.size() - 1) - 1;
}

Vec YPath::at(double t) const {
    const std::size_t i = locate(t);
    const double h = t_[i + 1] - t_[i], s = (t - t_[i]) / h;
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    return h00 * y_[i] + h10 * h * v_[i] + h01 * y_[i + 1] + h11 * h * v_[i + 1];
}

Vec YPath::rate(double t) const {
    const std::size_t i = locate(t);
    const double h = t_[i + 1] - t_[i], s = (t - t_[i]) / h;
    const double d00 = (6 * s * s - 6 * s) / h, d10 = 3 * s * s - 4 * s + 1;
    const double d01 = (-6 * s * s + 6 * s) / h, d11 = 3 * s * s - 2 * s;
    return d00 * y_[i] + d10 * v_[i] + d01 * y_[i + 1] + d11 * v_[i + 1];
}

double YPath::sigma() const {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < t_.size(); ++i)
        for (int j = 0; j <= 8; ++j) s = std::max(s, rate(t_[i] + (t_[i + 1] - t_[i]) * j / 8.0).norm());
    return s;
}

// ---------------------------------------------------------------- fibre equation

namespace {

VecField fibre_field(const GpBundle& b, const YPath& path, const VecField& forcing, bool subtract_stiff) {
    return [&b, &path, forcing, subtract_stiff](double t, const Vec& V) {
        const Vec y = path.at(t), yd = path.rate(t);
        Vec out = b.apply_Ae(y, V);
        if (!yd.isZero(0.0)) out += b.second_fundamental_form(y, yd, V);
        if (forcing) out += forcing(t, V);
        if (subtract_stiff) out -= b.stiff_apply(V);
        return out;
    };
}

}  // namespace

double fibre_energy(const GpBundle& b, const Vec& y, const Vec& V) {
    return b.decomposition().space->pair(b.ops(y)->apply_L(V), V);
}

LinearRun duhamel_solve(const GpBundle& b, const YPath& path, double s, double t, const Vec& V0,
                        const VecField& forcing, const IntegratorConfig& cfg) {
    const bool lawson = cfg.scheme == Scheme::Lawson;
    const VecField f = fibre_field(b, path, forcing, lawson);
    const LinearFlow E = [&b](double h, const Vec& x) { return b.stiff_exponential(h, x); };
    LinearRun run;
    run.traj = integrate(f, E, V0, s, t, cfg);
    for (std::size_t i = 0; i < run.traj.t.size(); ++i) {
        const Vec& V = run.traj.x[i];
        run.perp.push_back(V - b.fibre_project(path.at(run.traj.t[i]), V));
    }
    return run;
}

Vec flow_S(const GpBundle& b, const YPath& path, double s, double t, const Vec& V0, const IntegratorConfig& cfg) {
    if (s == t) return V0;
    return duhamel_solve(b, path, s, t, V0, nullptr, cfg).traj.x.back();
}

Trajectory integrate_perp(const GpBundle& b, const YPath& path, double s, double t, const Vec& W0,
                          const VecField& forcing, const IntegratorConfig& cfg) {
    const Decomposition& dec = b.decomposition();
    const VecField f = [&](double tau, const Vec& W) {
        const Vec y = path.at(tau), yd = path.rate(tau);
        const Vec ys = b.spatial(y);
        Vec out = yd.isZero(0.0) ? Vec(Vec::Zero(W.size())) : Vec(-dec.d_project(ys, Block::E, b.spatial(yd), W));
        if (forcing) {
            const Vec g = forcing(tau, W);
            out += g - b.fibre_project(y, g);
        }
        return out;
    };
    IntegratorConfig c = cfg;
    c.scheme = Scheme::Rk4;
    return integrate(f, nullptr, W0, s, t, c);
}

// ---------------------------------------------------------------- reduced systems

namespace {

ReducedTrajectory run_points(const VecField& N, const CutoffSystem& sys, const BundlePoint& p0,
                             const IntegratorConfig& cfg, double t0, double t1) {
    const BlockDims dims = sys.dims();
    const LinearFlow E = [&sys, dims](double h, const Vec& x) {
        Vec out = x;
        out.tail(dims.fibre) = sys.stiff_exponential(h, x.tail(dims.fibre));
        return out;
    };
    const Trajectory tr = integrate(N, E, pack(p0), t0, t1, cfg);
    ReducedTrajectory out;
    out.t = tr.t;
    for (const Vec& x : tr.x) out.points.push_back(unpack(x, dims));
    return out;
}

VecField split_field(const CutoffSystem& sys, const std::function<BundlePoint(const BundlePoint&)>& rhs, bool lawson) {
    const BlockDims dims = sys.dims();
    return [&sys, rhs, lawson, dims](double, const Vec& x) {
        const BundlePoint p = unpack(x, dims);
        BundlePoint r = rhs(p);
        if (lawson) r.V -= sys.stiff_apply(p.V);
        return pack(r);
    };
}

}  // namespace

ReducedTrajectory integrate_cutoff(const CutoffSystem& sys, const CutoffParams& params, const BundlePoint& p0,
                                   const IntegratorConfig& cfg, double t0) {
    const bool lawson = cfg.scheme == Scheme::Lawson;
    const VecField N = split_field(sys, [&](const BundlePoint& p) { return sys.cutoff_rhs(p, params); }, lawson);
    return run_points(N, sys, p0, cfg, t0, t0 + cfg.horizon);
}

ReducedTrajectory integrate_bundle_field(const CutoffSystem& sys, const BundleField& rhs, const BundlePoint& p0,
                                         double t1, const IntegratorConfig& cfg, double t0) {
    return run_points(split_field(sys, rhs, cfg.scheme == Scheme::Lawson), sys, p0, cfg, t0, t1);
}

ReducedTrajectory integrate_reduced(const GpBundle& b, const BundlePoint& p0, const IntegratorConfig& cfg,
                                    ReducedMode mode, const CutoffParams& params) {
    if (mode == ReducedMode::Cutoff) return integrate_cutoff(b, params, p0, cfg);
    const bool lawson = cfg.scheme == Scheme::Lawson;
    const VecField N = split_field(b, [&](const BundlePoint& p) { return b.reduced_rhs(p).rate; }, lawson);
    ReducedTrajectory out = run_points(N, b, p0, cfg, 0.0, cfg.horizon);
    for (const BundlePoint& p : out.points) out.energy.push_back(b.energy_of(p));
    return out;
}

// ---------------------------------------------------------------- linear estimates

namespace {

Vec random_fibre_vector(const GpBundle& b, std::mt19937_64& rng) {
    const Grid& g = b.grid();
    std::normal_distribution<double> n01;
    Field f(g);
    for (Eigen::Index i = 0; i < f.re.size(); ++i) {
        f.re[i] = n01(rng);
        f.im[i] = n01(rng);
    }
    f.re = band_limit(g, f.re, 0.25);
    f.im = band_limit(g, f.im, 0.25);
    Vec v = b.fibre_project(Vec::Zero(b.dims().k), stack(f));
    const double e = fibre_energy(b, Vec::Zero(b.dims().k), v);
    return v / std::sqrt(std::max(e, 1e-300));
}

/// ||e^{eta (t - tau)} g(tau)||_{L^{p'}} on uniform samples (p = 1 gives the sup).
double weighted_time_norm(const std::vector<double>& tau, const std::vector<double>& g, double t, double eta, double p) {
    std::vector<double> w(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) w[i] = std::exp(eta * (t - tau[i])) * std::abs(g[i]);
    if (p <= 1.0) return *std::max_element(w.begin(), w.end());
    const double q = p / (p - 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < tau.size(); ++i)
        sum += 0.5 * (std::pow(w[i], q) + std::pow(w[i + 1], q)) * (tau[i + 1] - tau[i]);
    return std::pow(sum, 1.0 / q);
}

}  // namespace

LinearEstimateReport measure_linear_estimate(const GpBundle& b, const LinearEstimateScenario& sc) {
    LinearEstimateReport rep;
    rep.p_tilde = sc.p_tilde;
    std::mt19937_64 rng(sc.seed);
    const Vec y0 = Vec::Zero(b.dims().k);
    const Vec V0 = random_fibre_vector(b, rng);
    IntegratorConfig cfg = sc.integrator;

    // sigma = 0: conservation of the fibre energy
    {
        const YPath path = YPath::constant(y0, 0.0, sc.horizon);
        IntegratorConfig fine = cfg;
        fine.dt = sc.conservation_dt;
        const LinearRun run = duhamel_solve(b, path, 0.0, sc.horizon, V0, nullptr, fine);
        const double e0 = fibre_energy(b, y0, V0);
        for (std::size_t i = 1; i < run.traj.t.size(); ++i) {
            const double e = fibre_energy(b, y0, run.traj.x[i]);
            rep.energy_drift = std::max(rep.energy_drift, std::abs(e - e0) / (e0 * run.traj.t[i]));
        }
    }

    // sigma sweep: translating base point at constant speed
    Vec dir = Vec::Zero(b.dims().k);
    if (dir.size() > 0) dir[0] = 1.0;
    for (double sigma : sc.sigmas) {
        const YPath path = YPath::linear(y0, sigma * dir, 0.0, sc.horizon);
        const LinearRun run = duhamel_solve(b, path, 0.0, sc.horizon, V0, nullptr, cfg);
        const double e0 = fibre_energy(b, y0, V0);
        double ex = 0.0;
        for (std::size_t i = 1; i < run.traj.t.size(); ++i) {
            const double t = run.traj.t[i];
            const double e = fibre_energy(b, path.at(t), run.traj.x[i]);
            ex = std::max(ex, 0.5 * std::abs(std::log(e / e0)) / t);
        }
        rep.sigmas.push_back(sigma);
        rep.exponents.push_back(ex);
    }
    if (rep.sigmas.size() >= 2) {
        const auto n = static_cast<double>(rep.sigmas.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < rep.sigmas.size(); ++i) {
            sx += rep.sigmas[i];
            sy += rep.exponents[i];
            sxx += rep.sigmas[i] * rep.sigmas[i];
            sxy += rep.sigmas[i] * rep.exponents[i];
            syy += rep.exponents[i] * rep.exponents[i];
        }
        const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
        rep.exponent_slope = vx > 0 ? cov / vx : 0.0;
        rep.exponent_r2 = vx > 0 && vy > 0 ? cov * cov / (vx * vy) : 1.0;
    }

    // eta sweep: forcing prefactor with sigma = 0. The extremal forcing transports a
    // fixed unit vector backwards, f(tau) = g(tau) S(tau, t) u with g = e^{-p eta (t - tau)}.
    for (double eta : sc.etas) {
        const double T = sc.forcing_efolds / eta;
        const YPath path = YPath::constant(y0, 0.0, T);
        IntegratorConfig half = cfg;
        half.dt = cfg.dt * 0.5;
        half.record_every = 1;
        // backward transport at half-step resolution so every RK stage time is a sample
        const long steps = static_cast<long>(std::ceil(T / cfg.dt - 1e-9));
        half.dt = T / static_cast<double>(2 * steps);
        const LinearRun back = duhamel_solve(b, path, T, 0.0, V0, nullptr, half);
        const double hs = half.dt;
        auto transported = [&back, hs, T](double tau) -> const Vec& {
            const auto idx = static_cast<std::size_t>(std::llround((T - tau) / hs));
            return back.traj.x[std::min(idx, back.traj.x.size() - 1)];
        };
        const double p = sc.p_tilde;
        auto g_of = [eta, p, T](double tau) { return std::exp(-p * eta * (T - tau)); };
        IntegratorConfig fwd = cfg;
        fwd.dt = T / static_cast<double>(steps);
        double best = 0.0;
        {
            const VecField f = [&](double tau, const Vec&) { return Vec(g_of(tau) * transported(tau)); };
            const LinearRun run = duhamel_solve(b, path, 0.0, T, Vec::Zero(V0.size()), f, fwd);
            std::vector<double> tau, g;
            for (long i = 0; i <= 2 * steps; ++i) {
                const double s = hs * static_cast<double>(i);
                tau.push_back(s);
                g.push_back(g_of(s) * std::sqrt(std::max(0.0, fibre_energy(b, y0, transported(s)))));
            }
            const double num = std::sqrt(std::max(0.0, fibre_energy(b, y0, run.traj.x.back())));
            best = std::max(best, num / weighted_time_norm(tau, g, T, eta, p));
        }
        for (int r = 0; r < sc.random_forcings; ++r) {
            const Vec u = random_fibre_vector(b, rng);
            const VecField f = [&](double tau, const Vec&) { return Vec(g_of(tau) * u); };
            const LinearRun run = duhamel_solve(b, path, 0.0, T, Vec::Zero(V0.size()), f, fwd);
            std::vector<double> tau, g;
            for (long i = 0; i <= 2 * steps; ++i) {
                const double s = hs * static_cast<double>(i);
                tau.push_back(s);
                g.push_back(g_of(s));
            }
            const double num = std::sqrt(std::max(0.0, fibre_energy(b, y0, run.traj.x.back())));
            best = std::max(best, num / weighted_time_norm(tau, g, T, eta, p));
        }
        rep.etas.push_back(eta);
        rep.prefactors.push_back(best);
        rep.normalized.push_back(best * std::pow(eta, 1.0 / p));
    }
    if (!rep.normalized.empty()) {
        double mean = 0.0;
        for (double v : rep.normalized) mean += v;
        mean /= static_cast<double>(rep.normalized.size());
        for (double v : rep.normalized) rep.normalized_spread = std::max(rep.normalized_spread, std::abs(v / mean - 1.0));
    }
    return rep;
}

}  // namespace imk
