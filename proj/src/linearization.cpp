#include "imk/linearization.hpp"

#include "imk/errors.hpp"
#include "imk/norms.hpp"

#include <cmath>

namespace imk {

LinOpSet::LinOpSet(const WaveProfile& profile, const Vec& y, const ModelParams& mp)
    : c_(profile.c), y_(y), mp_(mp) {
    mp_.validate();
    if (y.size() != profile.U.grid.spatial_dim()) throw ShapeError("shift has wrong dimension");
    U_ = y.isZero(0.0) ? profile.U : translate(profile.U, y);
    const Eigen::ArrayXd u2 = U_.re.square(), v2 = U_.im.square(), uv = U_.re * U_.im;
    q_ = {2.0 * uv, u2 - 1.0 + 3.0 * v2, 3.0 * (1.0 - u2) - v2, -2.0 * uv};
}

Field LinOpSet::apply_K(const Field& w) const {
    Field out = w;
    out.re -= apply_chi(grid(), U_.im * w.im, mp_);
    return out;
}

Field LinOpSet::apply_K_inv(const Field& w) const {
    Field out = w;
    out.re += apply_chi(grid(), U_.im * w.im, mp_);
    return out;
}

Field LinOpSet::apply_K_adjoint(const Field& w) const {
    Field out = w;
    out.im -= U_.im * apply_chi(grid(), w.re, mp_);
    return out;
}

Field LinOpSet::apply_K_inv_adjoint(const Field& w) const {
    Field out = w;
    out.im += U_.im * apply_chi(grid(), w.re, mp_);
    return out;
}

Field LinOpSet::apply_L(const Field& f) const { return hessian_apply(U_, c_, f); }

Field LinOpSet::apply_JL(const Field& f) const { return apply_J(apply_L(f)); }

Field LinOpSet::apply_JL_inf(const Field& f) const {
    const Grid& g = grid();
    Field Lf(g);
    Lf.re = 2.0 * f.re - laplacian(g, f.re);
    Lf.im = -laplacian(g, f.im);
    if (!c_.isZero(0.0)) {
        Lf.re -= directional_derivative(g, f.im, c_);
        Lf.im += directional_derivative(g, f.re, c_);
    }
    return apply_J(Lf);
}

Field LinOpSet::apply_Q(const Field& f) const {
    return Field(grid(), q_[0] * f.re + q_[1] * f.im, q_[2] * f.re + q_[3] * f.im);
}

std::array<std::complex<double>, 2> jl_inf_eigenvalues(const Vec& c, const Vec& k) {
    const double ck = c.dot(k), kk = k.squaredNorm();
    const double w = std::sqrt(kk * (2.0 + kk));
    return {std::complex<double>(0.0, ck + w), std::complex<double>(0.0, ck - w)};
}

std::shared_ptr<const LinOpSet> LinOpCache::at(const Vec& y) {
    std::vector<long long> key(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(y[i] * 1e12);
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    auto set = std::make_shared<const LinOpSet>(profile_, y, mp_);
    if (entries_.size() > 256) entries_.clear();
    entries_.emplace(std::move(key), set);
    return set;
}

std::size_t LinOpCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

double x1_operator_norm(const Grid& g, const std::function<Field(const Field&)>& op,
                        const std::function<Field(const Field&)>& adjoint, std::mt19937_64& rng, int iterations) {
    // With s = R^{1/2} w (R the X1 Riesz map) the operator becomes
    // B = R^{1/2} op R^{-1/2} on plain L2; iterate on B^T B.
    auto F = fourier_for(g);
    const Eigen::ArrayXd k2 = F->k2();
    const Eigen::ArrayXd r1 = (1.0 + k2).sqrt(), r2 = k2.sqrt();
    const Eigen::ArrayXd r1i = 1.0 / r1, r2i = (r2 > 0.0).select(1.0 / r2.max(1e-300), 0.0);
    auto scale = [&](const Field& f, const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
        return Field(g, F->apply(f.re, a), F->apply(f.im, b));
    };
    std::normal_distribution<double> n01;
    Field s(g);
    for (Eigen::Index i = 0; i < s.re.size(); ++i) {
        s.re[i] = n01(rng);
        s.im[i] = n01(rng);
    }
    s = scale(s, Eigen::ArrayXd::Ones(k2.size()), (r2 > 0.0).cast<double>());
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double ns = std::sqrt(inner(s, s));
        if (ns == 0.0) return 0.0;
        s *= 1.0 / ns;
        const Field Bs = scale(op(scale(s, r1i, r2i)), r1, r2);
        est = std::sqrt(inner(Bs, Bs));
        s = scale(adjoint(scale(Bs, r1, r2)), r1i, r2i);
    }
    return est;
}

}  // namespace imk
