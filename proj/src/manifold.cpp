#include "imk/manifold.hpp"

#include "imk/errors.hpp"

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace imk {

Side parse_side(const std::string& s) {
    if (s == "cu") return Side::Cu;
    if (s == "cs") return Side::Cs;
    if (s == "c" || s == "center" || s == "centre") return Side::Center;
    throw ParameterError("unknown side '" + s + "' (expected cu, cs or c)");
}

const char* side_name(Side s) {
    switch (s) {
        case Side::Cu: return "cu";
        case Side::Cs: return "cs";
        case Side::Center: return "c";
    }
    return "?";
}

namespace {

Eigen::Index axis_count(const BlockDims& d, Side side, Eigen::Index m) {
    return d.d1 + d.d2 + (side == Side::Center ? 0 : d.d) + m;
}

double sup_vec(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------- GraphFn

GraphFn::GraphFn(const CutoffSystem& sys, Side side, const CutoffParams& params, Eigen::Index modes,
                 std::vector<int> points, double half_width)
    : sys_(&sys), side_(side), params_(params), half_width_(half_width > 0.0 ? half_width : params.delta),
      points_(std::move(points)) {
    const BlockDims d = sys.dims();
    if (d.d == 0 && side != Side::Center) throw ParameterError("a cu or cs graph needs a hyperbolic block (d > 0)");
    directions_ = modes > 0 ? sys.fibre_directions(modes) : Mat::Zero(d.fibre, 0);
    if (static_cast<Eigen::Index>(points_.size()) != axis_count(d, side, directions_.cols()))
        throw ShapeError("graph domain needs one point count per axis");
    Eigen::Index total = 1;
    for (int p : points_) {
        if (p < 1) throw ParameterError("every axis needs at least one point");
        total *= p;
    }
    const Eigen::Index m = directions_.cols();
    Mat gram(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            gram(i, j) = gram(j, i) = sys.fibre_inner(directions_.col(i), directions_.col(j));
    gram_.compute(gram);
    values_ = Mat::Zero(value_size(), total);
}

GraphFn GraphFn::uniform(const CutoffSystem& sys, Side side, const CutoffParams& params, Eigen::Index modes,
                         int points, double half_width) {
    const Eigen::Index m = modes > 0 ? sys.fibre_directions(modes).cols() : 0;
    return GraphFn(sys, side, params, modes, std::vector<int>(axis_count(sys.dims(), side, m), points), half_width);
}

GraphFn GraphFn::zeros_like() const {
    GraphFn g = *this;
    g.values_.setZero();
    g.jet_.clear();
    return g;
}

Eigen::Index GraphFn::value_size() const { return side_ == Side::Center ? 2 * sys_->dims().d : sys_->dims().d; }

double GraphFn::axis_node(Eigen::Index axis, int j) const {
    const int p = points_[axis];
    return p == 1 ? 0.0 : -half_width_ + 2.0 * half_width_ * j / (p - 1);
}

double GraphFn::axis_weight(Eigen::Index axis) const {
    const BlockDims d = sys_->dims();
    const double Q = params_.Q;
    if (axis < d.d1) return Q;
    if (axis < d.d1 + d.d2) return Q * Q * Q;
    if (side_ != Side::Center && axis < d.d1 + d.d2 + d.d) return 1.0;
    return Q * Q;
}

Vec GraphFn::sample_coords(Eigen::Index i) const {
    Vec x(axes());
    for (Eigen::Index a = axes() - 1; a >= 0; --a) {
        const int p = points_[a];
        x[a] = axis_node(a, static_cast<int>(i % p));
        i /= p;
    }
    return x;
}

namespace {

struct Stencil {
    std::vector<Eigen::Index> base;
    std::vector<double> frac;
    std::vector<Eigen::Index> stride;
    std::vector<Eigen::Index> active;
};

Stencil locate(const Vec& x, const std::vector<int>& points, double R) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Stencil s;
    s.base.assign(n, 0);
    s.frac.assign(n, 0.0);
    s.stride.assign(n, 1);
    for (Eigen::Index a = n - 2; a >= 0; --a) s.stride[a] = s.stride[a + 1] * points[a + 1];
    for (Eigen::Index a = 0; a < n; ++a) {
        const int p = points[a];
        if (p == 1) continue;
        const double t = (std::clamp(x[a], -R, R) + R) / (2.0 * R) * (p - 1);
        const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t)), p - 2);
        s.base[a] = j;
        s.frac[a] = t - static_cast<double>(j);
        s.active.push_back(a);
    }
    return s;
}

template <class F>
void for_corners(const Stencil& s, F&& f) {
    Eigen::Index origin = 0;
    for (std::size_t a = 0; a < s.base.size(); ++a) origin += s.base[a] * s.stride[a];
    const std::size_t na = s.active.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << na); ++mask) {
        double w = 1.0;
        Eigen::Index idx = origin;
        for (std::size_t k = 0; k < na; ++k) {
            const Eigen::Index a = s.active[k];
            if (mask & (std::size_t{1} << k)) {
                w *= s.frac[a];
                idx += s.stride[a];
            } else {
                w *= 1.0 - s.frac[a];
            }
        }
        if (w != 0.0) f(idx, w);
    }
}

}  // namespace

Vec GraphFn::eval_coords(const Vec& x) const {
    Vec out = Vec::Zero(value_size());
    for_corners(locate(x, points_, half_width_), [&](Eigen::Index i, double w) { out += w * values_.col(i); });
    return out;
}

Mat GraphFn::jet_coords(const Vec& x) const {
    Mat out = Mat::Zero(value_size(), axes());
    if (jet_.empty()) return out;
    for_corners(locate(x, points_, half_width_), [&](Eigen::Index i, double w) { out += w * jet_[i]; });
    return out;
}

Vec GraphFn::tangent_coords(const Vec& y, const BundlePoint& dW) const {
    const BlockDims d = sys_->dims();
    Vec x(axes());
    Eigen::Index o = 0;
    x.segment(o, d.d1) = dW.a_d1;
    o += d.d1;
    x.segment(o, d.d2) = dW.a_d2;
    o += d.d2;
    if (side_ == Side::Cu) x.segment(o, d.d) = dW.a_plus;
    if (side_ == Side::Cs) x.segment(o, d.d) = dW.a_minus;
    if (side_ != Side::Center) o += d.d;
    const Eigen::Index m = directions_.cols();
    if (m > 0) {
        const Vec Vr = sys_->to_reference(y, dW.V);
        Vec b(m);
        for (Eigen::Index j = 0; j < m; ++j) b[j] = sys_->fibre_inner(directions_.col(j), Vr);
        x.segment(o, m) = gram_.solve(b);
    }
    return x;
}

Vec GraphFn::coords_of(const BundlePoint& W, double* discarded) const {
    const Vec x = tangent_coords(W.y, W);
    if (discarded) {
        const Eigen::Index m = directions_.cols();
        const Vec Vr = sys_->to_reference(W.y, W.V);
        *discarded = sys_->fibre_norm(m > 0 ? Vec(Vr - directions_ * x.tail(m)) : Vr);
    }
    return x;
}

BundlePoint GraphFn::point_at(const Vec& coords, const Vec& y) const {
    const BlockDims d = sys_->dims();
    BundlePoint W = BundlePoint::zero(d);
    W.y = y;
    Eigen::Index o = 0;
    W.a_d1 = coords.segment(o, d.d1);
    o += d.d1;
    W.a_d2 = coords.segment(o, d.d2);
    o += d.d2;
    if (side_ == Side::Cu) W.a_plus = coords.segment(o, d.d);
    if (side_ == Side::Cs) W.a_minus = coords.segment(o, d.d);
    if (side_ != Side::Center) o += d.d;
    const Eigen::Index m = directions_.cols();
    if (m > 0) W.V = sys_->from_reference(y, directions_ * coords.segment(o, m));
    close(W, eval_coords(coords));
    return W;
}

void GraphFn::close(BundlePoint& W, const Vec& value) const {
    const int d = sys_->dims().d;
    switch (side_) {
        case Side::Cu: W.a_minus = value; break;
        case Side::Cs: W.a_plus = value; break;
        case Side::Center:
            W.a_plus = value.head(d);
            W.a_minus = value.tail(d);
            break;
    }
}

Vec GraphFn::dependent(const BundlePoint& W) const {
    switch (side_) {
        case Side::Cu: return W.a_minus;
        case Side::Cs: return W.a_plus;
        case Side::Center: {
            Vec v(W.a_plus.size() + W.a_minus.size());
            v << W.a_plus, W.a_minus;
            return v;
        }
    }
    return {};
}

double GraphFn::sup() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }

double GraphFn::base_value() const { return eval_coords(Vec::Zero(axes())).norm(); }

double GraphFn::lipschitz() const {
    double L = 0.0;
    std::vector<Eigen::Index> stride(points_.size(), 1);
    for (Eigen::Index a = axes() - 2; a >= 0; --a) stride[a] = stride[a + 1] * points_[a + 1];
    for (Eigen::Index i = 0; i < sample_count(); ++i) {
        for (Eigen::Index a = 0; a < axes(); ++a) {
            const int p = points_[a];
            if (p == 1 || (i / stride[a]) % p == p - 1) continue;
            const double dx = axis_weight(a) * 2.0 * half_width_ / (p - 1);
            L = std::max(L, (values_.col(i + stride[a]) - values_.col(i)).norm() / dx);
        }
    }
    return L;
}

GammaCheck gamma_check(const GraphFn& h) {
    GammaCheck g;
    g.base = h.base_value();
    g.lipschitz = h.lipschitz();
    g.sup = h.sup();
    const double mu = h.side() == Side::Center ? h.params().mu / (1.0 - h.params().mu) : h.params().mu;
    g.pass = g.base <= 1e-12 && g.lipschitz <= mu && g.sup <= h.params().delta / 15.0;
    return g;
}

// ---------------------------------------------------------------- Lyapunov-Perron

double SolverConfig::resolved_horizon(double lambda, double eta) const {
    if (horizon > 0.0) return horizon;
    if (!(lambda > eta)) throw ParameterError("the horizon needs lambda > eta");
    return 10.0 / (lambda - eta);
}

namespace {

/// Packed-state offsets of the dependent block and the fibre.
struct Layout {
    Eigen::Index packed = 0, fibre_off = 0, fibre = 0, dep_off = 0, dep = 0;
};

Layout layout_of(const GraphFn& h) {
    const BlockDims d = h.system().dims();
    Layout l;
    l.packed = d.packed_size();
    l.fibre = d.fibre;
    l.fibre_off = l.packed - d.fibre;
    const Eigen::Index plus = d.k + d.d1 + d.d2;
    l.dep_off = h.side() == Side::Cs ? plus : plus + d.d;
    l.dep = d.d;
    return l;
}

Mat dependent_matrix(const GraphFn& h) {
    return h.system().block_matrix(h.side() == Side::Cu ? Block::Minus : Block::Plus);
}

/// Lawson flow acting on every fibre segment of an augmented state made of
/// `columns` packed blocks followed by an untouched tail.
LinearFlow augmented_flow(const CutoffSystem& sys, const Layout& l, Eigen::Index columns) {
    return [&sys, l, columns](double t, const Vec& x) {
        Vec out = x;
        for (Eigen::Index c = 0; c < columns; ++c) {
            const Eigen::Index o = c * l.packed + l.fibre_off;
            out.segment(o, l.fibre) = sys.stiff_exponential(t, x.segment(o, l.fibre));
        }
        return out;
    };
}

void subtract_stiff(const CutoffSystem& sys, const Layout& l, Eigen::Index columns, const Vec& x, Vec& dx) {
    for (Eigen::Index c = 0; c < columns; ++c) {
        const Eigen::Index o = c * l.packed + l.fibre_off;
        dx.segment(o, l.fibre) -= sys.stiff_apply(x.segment(o, l.fibre));
    }
}

double signed_horizon(const GraphFn& h, const SolverConfig& cfg) {
    const CutoffSystem& sys = h.system();
    const double T = cfg.resolved_horizon(sys.lambda(), h.params().eta);
    return h.side() == Side::Cu ? -T : T;
}

IntegratorConfig quiet(const IntegratorConfig& c) {
    IntegratorConfig q = c;
    q.record_every = 1 << 30;
    return q;
}

}  // namespace

namespace {

/// Integrates the graph-closed cut-off system from W0 and returns the operator value.
class LpIntegrator {
public:
    LpIntegrator(const GraphFn& h, const SolverConfig& cfg)
        : h_(h), sys_(h.system()), l_(layout_of(h)), M_(dependent_matrix(h)), t_end_(signed_horizon(h, cfg)),
          ic_(quiet(cfg.integrator)), lawson_(cfg.integrator.scheme == Scheme::Lawson) {
        if (h.side() == Side::Center) throw ParameterError("the Lyapunov-Perron operator acts on cu or cs graphs");
        Eigen::EigenSolver<Mat> es(M_);
        P_ = es.eigenvectors();
        D_ = es.eigenvalues();
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(P_);
        diagonal_ = lu.isInvertible() && lu.rcond() > 1e-10;
        if (diagonal_) Pinv_ = lu.inverse();
    }

    /// exp(-t M)
    Mat weight(double t) const {
        if (!diagonal_) return (-t * M_).exp();
        const Eigen::VectorXcd e = (-t * D_).array().exp().matrix();
        return (P_ * e.asDiagonal() * Pinv_).real();
    }

    Vec value(const Vec& coords) const {
        const BlockDims dims = sys_.dims();
        const BundlePoint W0 = h_.point_at(coords, Vec::Zero(dims.k));
        Vec x0 = Vec::Zero(l_.packed + l_.dep);
        x0.head(l_.packed) = pack(W0);
        const VecField rhs = [this, &dims](double t, const Vec& x) {
            BundlePoint W = unpack(x.head(l_.packed), dims);
            const Vec hv = h_.eval(W);
            h_.close(W, hv);
            const BundlePoint R = sys_.cutoff_rhs(W, h_.params());
            const Vec G = h_.dependent(R) - M_ * hv;
            Vec dx(x.size());
            dx.head(l_.packed) = pack(R);
            dx.segment(l_.dep_off, l_.dep).setZero();
            dx.tail(l_.dep) = weight(t) * G;
            if (lawson_) subtract_stiff(sys_, l_, 1, x, dx);
            return dx;
        };
        const Trajectory tr = integrate(rhs, augmented_flow(sys_, l_, 1), x0, 0.0, t_end_, ic_);
        return -tr.x.back().tail(l_.dep);
    }

    double horizon() const { return std::abs(t_end_); }

private:
    const GraphFn& h_;
    const CutoffSystem& sys_;
    Layout l_;
    Mat M_;
    double t_end_;
    IntegratorConfig ic_;
    bool lawson_;
    bool diagonal_ = false;
    Eigen::MatrixXcd P_, Pinv_;
    Eigen::VectorXcd D_;
};

}  // namespace

Vec lp_value(const GraphFn& h, const Vec& coords, const SolverConfig& cfg) {
    return LpIntegrator(h, cfg).value(coords);
}

LpResult lp_apply(const GraphFn& h, const SolverConfig& cfg) {
    const LpIntegrator lp(h, cfg);
    LpResult res{h.zeros_like(), 0.0};
    for (Eigen::Index i = 0; i < h.sample_count(); ++i) res.graph.values().col(i) = lp.value(h.sample_coords(i));
    const CutoffParams& params = h.params();
    const double gap = h.system().lambda() - params.eta;
    res.tail_bound = cfg.C * params.delta * params.delta * std::exp(-gap * lp.horizon()) / gap;
    return res;
}

GraphSolution solve_graph(const CutoffSystem& sys, Side side, const CutoffParams& params, Eigen::Index modes,
                          const std::vector<int>& points, const SolverConfig& cfg, double half_width) {
    GraphFn h(sys, side, params, modes, points, half_width);
    FixedPointReport rep;
    int bad = 0;
    double log_sum = 0.0;
    int log_n = 0;
    for (int it = 0; it < cfg.max_iter; ++it) {
        LpResult next = lp_apply(h, cfg);
        const double dist = (next.graph.values() - h.values()).cwiseAbs().maxCoeff();
        rep.tail_bound = next.tail_bound;
        h = std::move(next.graph);
        rep.iterations = it + 1;
        rep.distances.push_back(dist);
        rep.residual = dist;
        if (rep.distances.size() >= 2) {
            const double prev = rep.distances[rep.distances.size() - 2];
            if (prev > 0.0 && dist > 10.0 * cfg.tol) {
                const double r = dist / prev;
                rep.ratios.push_back(r);
                if (it >= cfg.burn_in) {
                    log_sum += std::log(std::max(r, 1e-300));
                    ++log_n;
                    bad = r >= 1.0 ? bad + 1 : 0;
                    if (bad >= 3)
                        throw ContractionFailure("Lyapunov-Perron iteration is not contracting (ratio " +
                                                 std::to_string(r) + "); reduce delta");
                }
            }
        }
        if (dist < cfg.tol) {
            rep.converged = true;
            break;
        }
    }
    rep.contraction = log_n > 0 ? std::exp(log_sum / log_n) : (rep.ratios.empty() ? 0.0 : rep.ratios.back());
    return {std::move(h), std::move(rep)};
}

ResidualStats invariance_residual(const GraphFn& h, const std::vector<Eigen::Index>& samples, double tau,
                                  const IntegratorConfig& integrator) {
    const CutoffSystem& sys = h.system();
    IntegratorConfig ic = quiet(integrator);
    ic.horizon = tau;
    ResidualStats st;
    double sum = 0.0;
    for (Eigen::Index i : samples) {
        const BundlePoint W0 = h.point_at(h.sample_coords(i), Vec::Zero(sys.dims().k));
        const BundlePoint W = integrate_cutoff(sys, h.params(), W0, ic).points.back();
        const double r = sup_vec(h.dependent(W) - h.eval(W)) / tau;
        st.max = std::max(st.max, r);
        sum += r;
        ++st.samples;
    }
    st.mean = st.samples > 0 ? sum / st.samples : 0.0;
    return st;
}

// ---------------------------------------------------------------- centre graph

namespace {

Vec with_free_block(const GraphFn& g, const Vec& center, const Vec& free) {
    const BlockDims d = g.system().dims();
    const Eigen::Index head = d.d1 + d.d2;
    Vec x(center.size() + free.size());
    x << center.head(head), free, center.tail(center.size() - head);
    return x;
}

void check_pair(const GraphFn& h_cu, const GraphFn& h_cs) {
    if (h_cu.side() != Side::Cu || h_cs.side() != Side::Cs) throw ParameterError("expected a cu and a cs graph");
    if (&h_cu.system() != &h_cs.system()) throw ParameterError("graphs belong to different systems");
    const CutoffParams &a = h_cu.params(), &b = h_cs.params();
    if (a.delta != b.delta || a.mu != b.mu || a.Q != b.Q) throw ParameterError("graphs use different cut-off parameters");
}

}  // namespace

Vec center_value(const GraphFn& h_cu, const GraphFn& h_cs, const Vec& c, int iterations) {
    check_pair(h_cu, h_cs);
    const int d = h_cu.system().dims().d;
    Vec ap = Vec::Zero(d), am = Vec::Zero(d);
    for (int it = 0; it < iterations; ++it) {
        ap = h_cs.eval_coords(with_free_block(h_cs, c, am));
        am = h_cu.eval_coords(with_free_block(h_cu, c, ap));
    }
    Vec out(2 * d);
    out << ap, am;
    return out;
}

GraphFn center_graph(const GraphFn& h_cu, const GraphFn& h_cs, double tol, int max_iter, CenterReport* report) {
    check_pair(h_cu, h_cs);
    const CutoffSystem& sys = h_cu.system();
    const BlockDims d = sys.dims();
    std::vector<int> pts;
    for (Eigen::Index a = 0; a < h_cu.axes(); ++a)
        if (a < d.d1 + d.d2 || a >= d.d1 + d.d2 + d.d) pts.push_back(h_cu.points()[a]);
    GraphFn hc(sys, Side::Center, h_cu.params(), h_cu.modes(), pts, h_cu.half_width());
    CenterReport rep;
    for (Eigen::Index i = 0; i < hc.sample_count(); ++i) {
        const Vec c = hc.sample_coords(i);
        Vec ap = Vec::Zero(d.d), am = Vec::Zero(d.d);
        int it = 0;
        double upd = 0.0;
        for (; it < max_iter; ++it) {
            const Vec np = h_cs.eval_coords(with_free_block(h_cs, c, am));
            const Vec nm = h_cu.eval_coords(with_free_block(h_cu, c, np));
            upd = std::max(sup_vec(np - ap), sup_vec(nm - am));
            ap = np;
            am = nm;
            if (upd <= tol) break;
        }
        if (upd > tol) throw ContractionFailure("centre graph alternation did not converge; check the Lipschitz gates");
        hc.values().col(i) << ap, am;
        rep.max_iterations = std::max(rep.max_iterations, it + 1);
        rep.max_update = std::max(rep.max_update, upd);
    }
    if (report) *report = rep;
    return hc;
}

// ---------------------------------------------------------------- jets

GraphFn jet1_solve(const GraphFn& h, const SolverConfig& cfg, JetReport* report) {
    if (h.side() == Side::Center) throw ParameterError("jets are solved on cu or cs graphs");
    const CutoffSystem& sys = h.system();
    const BlockDims dims = sys.dims();
    const CutoffParams& params = h.params();
    const Layout l = layout_of(h);
    const Mat M = dependent_matrix(h);
    const Eigen::Index n = h.axes();
    const double t_end = signed_horizon(h, cfg);
    const bool lawson = cfg.integrator.scheme == Scheme::Lawson;
    const IntegratorConfig ic = quiet(cfg.integrator);
    constexpr double kStep = 1e-6;

    // Tangent columns at the sample for each domain axis.
    Mat axis_tangent = Mat::Zero(l.packed, n);
    {
        const Vec zero_coords = Vec::Zero(n);
        for (Eigen::Index a = 0; a < n; ++a) {
            Vec e = zero_coords;
            e[a] = 1.0;
            GraphFn lin = h.zeros_like();
            BundlePoint dW = lin.point_at(e, Vec::Zero(dims.k));
            axis_tangent.col(a) = pack(dW);
        }
    }

    GraphFn cur = h;
    cur.jet().assign(h.sample_count(), Mat::Zero(h.value_size(), n));
    JetReport rep;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const VecField rhs = [&](double t, const Vec& x) {
            BundlePoint W = unpack(x.head(l.packed), dims);
            const Vec coords = cur.coords_of(W);
            h.close(W, h.eval_coords(coords));
            const Mat J = cur.jet_coords(coords);
            const Mat Et = (-t * M).exp();
            Vec dx = Vec::Zero(x.size());
            dx.head(l.packed) = pack(sys.cutoff_rhs(W, params));
            dx.segment(l.dep_off, l.dep).setZero();
            for (Eigen::Index c = 0; c < n; ++c) {
                const Vec u = x.segment((c + 1) * l.packed, l.packed);
                BundlePoint du = unpack(u, dims);
                const Vec ddep = J * cur.tangent_coords(W.y, du);
                h.close(du, ddep);
                const double scale = std::max(1.0, sup_vec(pack(du)));
                const double eps = kStep / scale;
                const BundlePoint Rp = sys.cutoff_rhs(W + eps * du, params);
                const BundlePoint Rm = sys.cutoff_rhs(W + (-eps) * du, params);
                const Vec dR = (pack(Rp) - pack(Rm)) / (2.0 * eps);
                Vec col = dR;
                col.segment(l.dep_off, l.dep).setZero();
                dx.segment((c + 1) * l.packed, l.packed) = col;
                dx.segment((n + 1) * l.packed + c * l.dep, l.dep) = Et * (dR.segment(l.dep_off, l.dep) - M * ddep);
            }
            if (lawson) subtract_stiff(sys, l, n + 1, x, dx);
            return dx;
        };
        const LinearFlow E = augmented_flow(sys, l, n + 1);
        std::vector<Mat> next(h.sample_count());
        for (Eigen::Index i = 0; i < h.sample_count(); ++i) {
            const BundlePoint W0 = h.point_at(h.sample_coords(i), Vec::Zero(dims.k));
            Vec x0 = Vec::Zero((n + 1) * l.packed + n * l.dep);
            x0.head(l.packed) = pack(W0);
            for (Eigen::Index c = 0; c < n; ++c) x0.segment((c + 1) * l.packed, l.packed) = axis_tangent.col(c);
            const Vec xe = integrate(rhs, E, x0, 0.0, t_end, ic).x.back();
            next[i] = -Eigen::Map<const Mat>(xe.data() + (n + 1) * l.packed, l.dep, n);
        }
        double dist = 0.0;
        for (Eigen::Index i = 0; i < h.sample_count(); ++i)
            dist = std::max(dist, (next[i] - cur.jet()[i]).cwiseAbs().maxCoeff());
        cur.jet() = std::move(next);
        rep.iterations = it + 1;
        rep.distances.push_back(dist);
        if (dist < std::max(cfg.tol, 1e-10)) {
            rep.converged = true;
            break;
        }
        if (rep.distances.size() >= 4) {
            const auto k = rep.distances.size();
            if (rep.distances[k - 1] >= rep.distances[k - 2] && rep.distances[k - 2] >= rep.distances[k - 3] &&
                rep.distances[k - 3] >= rep.distances[k - 4])
                throw ContractionFailure("first-variation iteration is not contracting; the jet gate fails");
        }
    }
    if (report) *report = rep;
    return cur;
}

// ---------------------------------------------------------------- files

namespace {

constexpr char kGraphMagic[4] = {'I', 'M', 'K', 'G'};

void write_doubles(std::ostream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& is, double* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw ShapeError("graph file is truncated");
}

}  // namespace

void save_graph(const std::string& path, const GraphFn& h) {
    const BlockDims d = h.system().dims();
    nlohmann::json meta = {
        {"side", side_name(h.side())},
        {"delta", h.params().delta},
        {"mu", h.params().mu},
        {"Q", h.params().Q},
        {"eta", h.params().eta},
        {"modes", h.modes()},
        {"points", h.points()},
        {"half_width", h.half_width()},
        {"value_size", h.value_size()},
        {"samples", h.sample_count()},
        {"jet", !h.jet().empty()},
        {"interp", "multilinear"},
        {"dims", {{"k", d.k}, {"d1", d.d1}, {"d2", d.d2}, {"d", d.d}, {"fibre", d.fibre}}},
    };
    const std::string header = meta.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParameterError("cannot open '" + path + "' for writing");
    os.write(kGraphMagic, 4);
    const auto len = static_cast<std::uint32_t>(header.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof len);
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    write_doubles(os, h.values().data(), static_cast<std::size_t>(h.values().size()));
    for (const Mat& J : h.jet()) write_doubles(os, J.data(), static_cast<std::size_t>(J.size()));
}

GraphFn load_graph(const std::string& path, const CutoffSystem& sys) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParameterError("cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kGraphMagic, 4) != 0) throw ShapeError("'" + path + "' is not a graph file");
    std::uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof len);
    std::string header(len, '\0');
    is.read(header.data(), len);
    if (!is) throw ShapeError("graph header is truncated");
    const auto meta = nlohmann::json::parse(header);
    const BlockDims d = sys.dims();
    const auto& md = meta.at("dims");
    if (md.at("k") != d.k || md.at("d1") != d.d1 || md.at("d2") != d.d2 || md.at("d") != d.d ||
        md.at("fibre") != d.fibre)
        throw ShapeError("graph file was built for a system of different dimensions");
    CutoffParams p{meta.at("delta"), meta.at("mu"), meta.at("Q"), meta.at("eta")};
    GraphFn h(sys, parse_side(meta.at("side")), p, meta.at("modes").get<Eigen::Index>(),
              meta.at("points").get<std::vector<int>>(), meta.at("half_width").get<double>());
    if (meta.at("samples").get<Eigen::Index>() != h.sample_count()) throw ShapeError("graph sample count mismatch");
    read_doubles(is, h.values().data(), static_cast<std::size_t>(h.values().size()));
    if (meta.at("jet").get<bool>()) {
        h.jet().assign(h.sample_count(), Mat::Zero(h.value_size(), h.axes()));
        for (Mat& J : h.jet()) read_doubles(is, J.data(), static_cast<std::size_t>(J.size()));
    }
    return h;
}

}  // namespace imk
