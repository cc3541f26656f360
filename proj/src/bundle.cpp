#include "imk/bundle.hpp"

#include "imk/errors.hpp"
#include "imk/gp_model.hpp"
#include "imk/norms.hpp"
#include "imk/propagator.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace imk {

// ---------------------------------------------------------------- points

BundlePoint BundlePoint::zero(const BlockDims& n) {
    BundlePoint p;
    p.y = Vec::Zero(n.k);
    p.a_d1 = Vec::Zero(n.d1);
    p.a_d2 = Vec::Zero(n.d2);
    p.a_plus = Vec::Zero(n.d);
    p.a_minus = Vec::Zero(n.d);
    p.V = Vec::Zero(n.fibre);
    return p;
}

BlockDims BundlePoint::dims() const {
    return {static_cast<int>(y.size()), static_cast<int>(a_d1.size()), static_cast<int>(a_d2.size()),
            static_cast<int>(a_plus.size()), V.size()};
}

bool BundlePoint::finite() const {
    return y.allFinite() && a_d1.allFinite() && a_d2.allFinite() && a_plus.allFinite() && a_minus.allFinite() &&
           V.allFinite();
}

const Vec& BundlePoint::coeffs(Block b) const {
    switch (b) {
        case Block::D1: return a_d1;
        case Block::D2: return a_d2;
        case Block::Plus: return a_plus;
        case Block::Minus: return a_minus;
        default: throw ParameterError("bundle points carry no coefficients for this block");
    }
}

Vec& BundlePoint::coeffs(Block b) { return const_cast<Vec&>(std::as_const(*this).coeffs(b)); }

Vec BundlePoint::transverse() const {
    Vec out(a_d1.size() + a_d2.size() + a_plus.size() + a_minus.size());
    out << a_d1, a_d2, a_plus, a_minus;
    return out;
}

Vec pack(const BundlePoint& p) {
    Vec out(p.dims().packed_size());
    out << p.y, p.a_d1, p.a_d2, p.a_plus, p.a_minus, p.V;
    return out;
}

BundlePoint unpack(const Vec& x, const BlockDims& n) {
    if (x.size() != n.packed_size()) throw ShapeError("packed bundle point has wrong length");
    BundlePoint p;
    Eigen::Index at = 0;
    auto take = [&](Eigen::Index m) {
        Vec v = x.segment(at, m);
        at += m;
        return v;
    };
    p.y = take(n.k);
    p.a_d1 = take(n.d1);
    p.a_d2 = take(n.d2);
    p.a_plus = take(n.d);
    p.a_minus = take(n.d);
    p.V = take(n.fibre);
    return p;
}

BundlePoint operator+(const BundlePoint& a, const BundlePoint& b) {
    return {a.y + b.y, a.a_d1 + b.a_d1, a.a_d2 + b.a_d2, a.a_plus + b.a_plus, a.a_minus + b.a_minus, a.V + b.V};
}

BundlePoint operator*(double s, const BundlePoint& a) {
    return {s * a.y, s * a.a_d1, s * a.a_d2, s * a.a_plus, s * a.a_minus, s * a.V};
}

double transverse_size(const BundlePoint& p, double v_norm) {
    return p.a_d1.norm() + p.a_d2.norm() + p.a_plus.norm() + p.a_minus.norm() + v_norm;
}

// ---------------------------------------------------------------- parameters

CutoffParams CutoffParams::defaults(double lambda) {
    CutoffParams p;
    p.eta = lambda > 0.0 ? std::min(0.5, 0.25 * lambda) : 0.5;
    return p;
}

void CutoffParams::validate(double lambda) const {
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    if (!(Q > 1.0)) throw ParameterError("Q must exceed 1");
    if (!(mu > 0.0 && mu < 0.2)) throw ParameterError("mu must lie in (0, 1/5)");
    if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("eta must lie in (0, 1)");
    if (lambda > 0.0 && !(eta < lambda)) throw ParameterError("eta must be smaller than the spectral gap");
}

double cutoff_gamma(double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return 1.0;
    if (a >= 3.0) return 0.0;
    const double t = 0.5 * (a - 1.0);
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double cutoff_gamma_prime(double x) {
    const double a = std::abs(x);
    if (a <= 1.0 || a >= 3.0) return 0.0;
    const double t = 0.5 * (a - 1.0);
    const double s = -0.5 * 30.0 * t * t * (1.0 - t) * (1.0 - t);
    return x < 0.0 ? -s : s;
}

bool ParameterGate::all() const {
    for (bool b : pass)
        if (!b) return false;
    return true;
}

std::string ParameterGate::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < margin.size(); ++i)
        os << "gate " << i + 1 << ": " << (pass[i] ? "pass" : "FAIL") << " (ratio " << margin[i] << ")\n";
    return os.str();
}

ParameterGate check_parameter_gates(const CutoffParams& p, double lambda, int d1, double C, int jet_order) {
    ParameterGate g;
    const double eta = p.eta, dl = p.delta, Q = p.Q;
    const double e1 = std::pow(eta, -(1.0 + d1));
    g.margin[0] = std::max({dl, 1.0 / Q, 5.0 * p.mu});
    g.margin[1] = C * e1 * (1.0 / Q + Q * Q * Q * dl);
    const double gap = lambda - eta;
    g.margin[2] = gap > 0.0 ? std::max(C / gap * e1 * Q * Q * Q * dl * dl, C / gap * std::pow(eta, -d1) * dl / p.mu)
                            : INFINITY;
    const double gap2 = lambda - 2.0 * eta;
    const double Q6 = std::pow(Q, 6.0);
    g.margin[3] = gap2 > 0.0 ? C *
                                   (std::pow(eta, -(2.0 * d1 + 1.0)) * Q6 * dl * dl + dl * dl / eta +
                                    std::pow(eta, -2.0 * (d1 + 1.0)) * Q6 * std::pow(dl, 4.0) / gap2) /
                                   eta
                             : INFINITY;
    g.margin[4] = gap2 > 0.0 ? C * dl * std::pow(eta, -d1) / gap2 : INFINITY;
    const double gapk = lambda - jet_order * eta;
    g.margin[5] = gapk > 0.0 && eta > C * dl ? C * dl * std::pow(eta, -jet_order * d1) / gapk : INFINITY;
    for (std::size_t i = 0; i < 6; ++i) g.pass[i] = i == 5 ? g.margin[i] <= 1.0 : g.margin[i] < 1.0;
    return g;
}

// ---------------------------------------------------------------- lattice bundle

struct GpBundle::Frame {
    Vec y, shift;
    std::shared_ptr<const LinOpSet> ops;
    Mat V, Z;  // translated basis and duals, all finite blocks
    std::vector<Vec> grad_profile;  // d_j U_c(. + y), one per active axis
};

GpBundle::GpBundle(std::shared_ptr<const Decomposition> dec, WaveProfile profile, ModelParams mp, double chart_radius)
    : dec_(std::move(dec)), profile_(std::move(profile)), mp_(mp), chart_radius_(chart_radius) {
    if (!dec_ || !dec_->space || !dec_->space->grid) throw ParameterError("bundle needs a lattice decomposition");
    if (*dec_->space->grid != profile_.U.grid) throw ShapeError("decomposition and profile live on different grids");
    axes_ = active_axes(profile_.U);
    if (static_cast<int>(axes_.size()) != dec_->translations)
        throw ShapeError("decomposition translations do not match the profile's active axes");
    dims_ = {dec_->translations, dec_->d1, dec_->d2, dec_->d, dec_->space->dim};
    cache_ = std::make_shared<LinOpCache>(profile_, mp_);
}

Vec GpBundle::spatial(const Vec& y) const {
    if (y.size() != dims_.k) throw ShapeError("translation coordinate has wrong length");
    Vec s = Vec::Zero(grid().spatial_dim());
    for (int j = 0; j < dims_.k; ++j) s[axes_[static_cast<std::size_t>(j)]] = y[j];
    return s;
}

std::shared_ptr<const LinOpSet> GpBundle::ops(const Vec& y) const { return cache_->at(spatial(y)); }

GpBundle::Frame GpBundle::frame(const Vec& y) const {
    Frame f;
    f.y = y;
    f.shift = spatial(y);
    f.ops = ops(y);
    const PhaseSpace& ps = *dec_->space;
    f.V.resize(ps.dim, dec_->finite_size());
    f.Z.resize(ps.dim, dec_->finite_size());
    for (Eigen::Index j = 0; j < dec_->finite_size(); ++j) {
        f.V.col(j) = ps.translate(dec_->V.col(j), f.shift);
        f.Z.col(j) = ps.translate(dec_->Z.col(j), f.shift);
    }
    for (int a : axes_) f.grad_profile.push_back(stack(derivative(f.ops->profile(), a)));
    return f;
}

Vec GpBundle::fibre_sum(const BundlePoint& p) const {
    if (p.dims().packed_size() != dims_.packed_size() || p.y.size() != dims_.k) throw ShapeError("bundle point has wrong shape");
    const Vec s = spatial(p.y);
    Vec Z = p.V;
    for (int b = 1; b < kFiniteBlocks; ++b) {
        const auto blk = static_cast<Block>(b);
        const Vec& a = p.coeffs(blk);
        if (a.size() > 0) Z += dec_->basis_at(s, blk) * a;
    }
    return Z;
}

Field GpBundle::embed(const BundlePoint& p) const {
    return ops(p.y)->apply_K_inv(unstack(grid(), fibre_sum(p)));
}

namespace {

/// U_c(. + y) + Z - chi(D)(Z_2^2)/2 e_1
Field chart_image(const LinOpSet& ops, const Field& Z) {
    Field U = ops.profile() + Z;
    U.re -= 0.5 * apply_chi(Z.grid, Z.im.square(), ops.model());
    return U;
}

/// Inverse of chart_image at a given base.
Field chart_preimage(const LinOpSet& ops, const Field& U) {
    Field Z = U - ops.profile();
    Z.re += 0.5 * apply_chi(U.grid, Z.im.square(), ops.model());
    return Z;
}

}  // namespace

Field GpBundle::chart(const BundlePoint& p) const {
    return chart_image(*ops(p.y), unstack(grid(), fibre_sum(p)));
}

BundlePoint GpBundle::chart_inverse(const Field& U, const Vec& y_guess) const {
    if (U.grid != grid()) throw ShapeError("field lives on a different grid");
    if (!U.finite()) throw OutOfChart("field has non-finite entries");
    const PhaseSpace& ps = *dec_->space;
    const int k = dims_.k;
    Vec y = y_guess;
    if (y.size() != k) throw ShapeError("translation guess has wrong length");
    // A poor guess is replaced by the best lattice shift along each active axis in turn.
    auto distance = [&](const Vec& t) { return ps.x1_norm(stack(chart_preimage(*ops(t), U))); };
    if (distance(y) > chart_radius_) {
        for (int j = 0; j < k; ++j) {
            const int a = axes_[static_cast<std::size_t>(j)];
            const double h = grid().spacing(a);
            Vec best = y, t = y;
            double best_d = distance(y);
            for (int i = -grid().dims[a] / 2; i < grid().dims[a] / 2; ++i) {
                t[j] = y[j] + i * h;
                const double dist = distance(t);
                if (dist < best_d) {
                    best_d = dist;
                    best = t;
                }
            }
            y = best;
        }
    }
    Field Z;
    double res = INFINITY;
    for (int it = 0; it < 40; ++it) {
        const Frame f = frame(y);
        Z = chart_preimage(*f.ops, U);
        const Vec z = stack(Z);
        const Mat ZT = f.Z.leftCols(k);
        const Vec F = ps.weight * ZT.transpose() * z;
        res = F.norm();
        if (!std::isfinite(res)) break;
        if (res <= 1e-13 * std::max(1.0, ps.x1_norm(z))) break;
        // dF_i/dy_j = <d_j zeta_i, Z> + <zeta_i, d_y Z>, d_y Z = -d_j U_c + chi(Z_2 (-d_j v_c)) e_1
        Mat Jac(k, k);
        for (int j = 0; j < k; ++j) {
            Vec e = Vec::Zero(grid().spatial_dim());
            e[axes_[static_cast<std::size_t>(j)]] = 1.0;
            Field dZ = unstack(grid(), -f.grad_profile[static_cast<std::size_t>(j)]);
            dZ.re += apply_chi(grid(), Z.im * dZ.im, mp_);
            const Vec dz = stack(dZ);
            for (int i = 0; i < k; ++i)
                Jac(i, j) = ps.pair(ps.derivative(ZT.col(i), e), z) + ps.pair(ZT.col(i), dz);
        }
        const Vec step = Jac.fullPivLu().solve(-F);
        if (!step.allFinite()) break;
        y += step;
    }
    for (int j = 0; j < k; ++j) {
        const double L = grid().lengths[static_cast<std::size_t>(axes_[static_cast<std::size_t>(j)])];
        y[j] -= L * std::round((y[j] - y_guess[j]) / L);
    }
    if (!(res <= 1e-10)) throw OutOfChart("translation constraint could not be solved (residual " + std::to_string(res) + ")");
    const Frame f = frame(y);
    const Vec z = stack(chart_preimage(*f.ops, U));
    if (ps.x1_norm(z) > chart_radius_)
        throw OutOfChart("field is outside the chart ball (X1 distance " + std::to_string(ps.x1_norm(z)) + ")");
    BundlePoint p = BundlePoint::zero(dims_);
    p.y = y;
    const Vec coeff = ps.weight * f.Z.transpose() * z;
    for (int b = 1; b < kFiniteBlocks; ++b) {
        const auto blk = static_cast<Block>(b);
        p.coeffs(blk) = coeff.segment(dec_->offsets[b], dec_->size(blk));
    }
    p.V = z - f.V * coeff;
    return p;
}

Vec GpBundle::fibre_project(const Vec& y, const Vec& V) const {
    const Vec s = spatial(y);
    return dec_->project(s, Block::E, V);
}

Vec GpBundle::second_fundamental_form(const Vec& y, const Vec& z, const Vec& V) const {
    const Vec s = spatial(y);
    const Vec pe = dec_->project(s, Block::E, V);
    return dec_->d_project(s, Block::E, spatial(z), 2.0 * pe - V);
}

Vec GpBundle::apply_Ae(const Vec& y, const Vec& V) const {
    const Vec s = spatial(y);
    const auto o = ops(y);
    return dec_->project(s, Block::E, o->apply_JL(dec_->project(s, Block::E, V)));
}

Vec GpBundle::G_stacked(const Frame& f, const Vec& Zv, const Vec& ydot) const {
    const Grid& g = grid();
    const LinOpSet& o = *f.ops;
    const Field Z = unstack(g, Zv);
    const Field& Uc = o.profile();
    const Eigen::ArrayXd rho = apply_chi(g, Z.im.square(), mp_);
    const Field U = chart_image(o, Z);
    const Eigen::ArrayXd modU = U.re.square() + U.im.square();
    const Eigen::ArrayXd N0 = modU - Uc.re.square() - Uc.im.square();
    const Eigen::ArrayXd N1 = N0 - 2.0 * (Uc.re * Z.re + Uc.im * Z.im);
    const Eigen::ArrayXd G2 = -N1 * Uc.re - N0 * Z.re - 0.5 * ((1.0 - modU) * rho + laplacian(g, rho));
    const Eigen::ArrayXd G11 =
        N1 * Uc.im + N0 * Z.im - apply_chi(g, Z.im * directional_derivative(g, Z.im, o.velocity()), mp_);
    Eigen::ArrayXd inner = -o.apply_L(Z).re + G2;
    for (int j = 0; j < dims_.k; ++j)
        inner -= ydot[j] * f.grad_profile[static_cast<std::size_t>(j)].tail(static_cast<Eigen::Index>(g.size())).array();
    const Eigen::ArrayXd G12 = apply_chi(g, Z.im * inner, mp_);
    return stack(Field(g, G11 + G12, G2));
}

Field GpBundle::nonlinearity_G(const Vec& y, const Vec& ydot, const Field& w) const {
    if (ydot.size() != dims_.k) throw ShapeError("translation speed has wrong length");
    const Frame f = frame(y);
    return unstack(grid(), G_stacked(f, stack(f.ops->apply_K(w)), ydot));
}

ReducedRate GpBundle::reduced_rhs(const BundlePoint& p) const {
    const PhaseSpace& ps = *dec_->space;
    const Grid& g = grid();
    const int k = dims_.k;
    const Frame f = frame(p.y);
    const Vec Z = fibre_sum(p);

    // Everything is affine in ydot: Zdot = r + sum_j ydot_j (g_j - d_j U_c), with
    // g_j = -chi(Z_2 d_j v_c) e_1 the ydot-part of the nonlinearity.
    const Vec r = f.ops->apply_JL(Z) + G_stacked(f, Z, Vec::Zero(k));
    const auto n = static_cast<Eigen::Index>(g.size());
    const Field Zf = unstack(g, Z);
    Mat gy(ps.dim, k), dZ(ps.dim, k);
    for (int j = 0; j < k; ++j) {
        Vec col = Vec::Zero(ps.dim);
        col.head(n) = -apply_chi(g, Zf.im * f.grad_profile[static_cast<std::size_t>(j)].tail(n).array(), mp_).matrix();
        gy.col(j) = col;
        dZ.col(j) = stack(derivative(Zf, axes_[static_cast<std::size_t>(j)]));
    }
    // a^b rates: <zeta^b, r + (g - grad Z) ydot>; for T the left side is ydot itself.
    const Vec c0 = ps.weight * f.Z.transpose() * r;
    const Mat C = ps.weight * f.Z.transpose() * (gy - dZ);

    ReducedRate out;
    const Vec b = c0.head(k);
    const Mat B = C.topRows(k);
    Vec ydot = b;
    bool converged = false;
    if (k > 0 && B.norm() < 0.9) {
        for (int it = 0; it < 200; ++it) {
            const Vec next = b + B * ydot;
            const double diff = (next - ydot).norm();
            ydot = next;
            out.ydot_iterations = it + 1;
            if (diff <= 1e-12 * std::max(1.0, ydot.norm())) {
                converged = true;
                break;
            }
        }
    } else {
        converged = k == 0;
    }
    if (!converged) {
        const Mat A = Mat::Identity(k, k) - B;
        Eigen::FullPivLU<Mat> lu(A);
        if (!lu.isInvertible()) throw NoConvergence("translation speed equation is singular");
        ydot = lu.solve(b);
        out.direct_solve = true;
    }

    const Vec rates = c0 + C * ydot;
    BundlePoint& q = out.rate;
    q = BundlePoint::zero(dims_);
    q.y = ydot;
    for (int bi = 1; bi < kFiniteBlocks; ++bi) {
        const auto blk = static_cast<Block>(bi);
        q.coeffs(blk) = rates.segment(dec_->offsets[bi], dec_->size(blk));
    }
    // V^e rate: Zdot minus the moving finite part.
    const Eigen::Index fo = dec_->offsets[1];
    const Vec S = Z - p.V;
    Vec Vdot = r - f.V.rightCols(f.V.cols() - fo) * rates.tail(rates.size() - fo);
    const Field Sf = unstack(g, S);
    for (int j = 0; j < k; ++j) {
        Vdot += ydot[j] * (gy.col(j) - f.grad_profile[static_cast<std::size_t>(j)] -
                           stack(derivative(Sf, axes_[static_cast<std::size_t>(j)])));
    }
    q.V = Vdot;
    return out;
}

BundlePoint GpBundle::cutoff_rhs(const BundlePoint& W, const CutoffParams& params) const {
    const Vec Pv = fibre_project(W.y, W.V);
    const double s = transverse_size(W, fibre_norm(W.V));
    const double gam = cutoff_gamma(3.0 * s / params.delta);
    BundlePoint out = BundlePoint::zero(dims_);
    const Vec AeV = apply_Ae(W.y, Pv);
    for (int bi = 1; bi < kFiniteBlocks; ++bi) {
        const auto blk = static_cast<Block>(bi);
        if (dec_->size(blk) > 0) out.coeffs(blk) = dec_->M(blk, blk) * W.coeffs(blk);
    }
    out.V = AeV;
    if (gam == 0.0) return out;

    BundlePoint p = W;
    p.V = Pv;
    const BundlePoint full = reduced_rhs(p).rate;
    out.y = gam * full.y;
    for (int bi = 1; bi < kFiniteBlocks; ++bi) {
        const auto blk = static_cast<Block>(bi);
        if (dec_->size(blk) > 0) out.coeffs(blk) += gam * (full.coeffs(blk) - out.coeffs(blk));
    }
    out.V += second_fundamental_form(W.y, out.y, W.V) +
             gam * (full.V - AeV - second_fundamental_form(W.y, full.y, Pv));
    return out;
}

double CutoffSystem::fibre_inner(const Vec& a, const Vec& b) const {
    const double p = fibre_norm(a + b), m = fibre_norm(a - b);
    return 0.25 * (p * p - m * m);
}

double GpBundle::fibre_norm(const Vec& V) const { return x1_norm(grid(), V); }

Vec GpBundle::to_reference(const Vec& y, const Vec& V) const {
    return stack(translate(unstack(grid(), V), -spatial(y)));
}

Vec GpBundle::from_reference(const Vec& y, const Vec& V) const {
    return stack(translate(unstack(grid(), V), spatial(y)));
}

Mat GpBundle::fibre_directions(Eigen::Index m) const {
    Mat modes = lowest_fibre_modes(*dec_, m).modes;
    for (Eigen::Index j = 0; j < modes.cols(); ++j) modes.col(j) /= std::max(1e-300, fibre_norm(modes.col(j)));
    return modes;
}

Vec GpBundle::stiff_apply(const Vec& V) const {
    return stack(ops(Vec::Zero(dims_.k))->apply_JL_inf(unstack(grid(), V)));
}

Vec GpBundle::stiff_exponential(double t, const Vec& V) const {
    return symbol_exponential(grid(), profile_.c, 2.0, t, V);
}

double GpBundle::energy_of(const BundlePoint& p) const { return energy_momentum(chart(p), profile_.c); }

double GpBundle::energy_excess(const BundlePoint& W) const {
    return 2.0 * (energy_of(W) - energy_momentum(profile_.U, profile_.c));
}

double GpBundle::energy_quadratic(const BundlePoint& W) const {
    const auto L = ops(W.y);
    double q = dec_->space->pair(L->apply_L(W.V), W.V);
    if (dims_.d > 0) {
        const Vec zp = dec_->basis_at(spatial(W.y), Block::Plus) * W.a_plus;
        const Vec zm = dec_->basis_at(spatial(W.y), Block::Minus) * W.a_minus;
        q += 2.0 * dec_->space->pair(L->apply_L(zm), zp);
    }
    return q;
}

bool GpBundle::nondegenerate() const {
    return dims_.d1 == 0 && dims_.d2 == 0 && dec_->dim_ker == dims_.k;
}

double GpBundle::fibre_inner(const Vec& a, const Vec& b) const { return x1_inner(grid(), a, b); }

}  // namespace imk
