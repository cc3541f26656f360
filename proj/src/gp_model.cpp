#include "imk/gp_model.hpp"

#include "imk/errors.hpp"

#include <cmath>

namespace imk {

double chi_bump(double kabs, double radius) {
    const double h = 0.5 * radius;
    if (kabs <= h) return 1.0;
    if (kabs >= radius) return 0.0;
    const double t = (kabs - h) / h;
    auto f = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    return f(1.0 - t) / (f(1.0 - t) + f(t));
}

void ModelParams::validate() const {
    if (!(chi_radius > 0.0)) throw ParameterError("chi radius must be positive");
}

double ModelParams::chi(const Wavevector& w) const { return chi_bump(std::sqrt(w.norm2()), chi_radius); }

Eigen::ArrayXd apply_chi(const Grid& g, const Eigen::ArrayXd& x, const ModelParams& mp) {
    auto F = fourier_for(g);
    Eigen::ArrayXd sym(F->spectrum_size());
    for (Eigen::Index s = 0; s < sym.size(); ++s) sym[s] = mp.chi(F->wavevectors()[s]);
    return F->apply(x, sym);
}

namespace {

double dirichlet_energy(const Grid& g, const Eigen::ArrayXd& x) {
    return -0.5 * (x * laplacian(g, x)).sum() * g.cell_volume();
}

}  // namespace

double energy(const Field& u) {
    const Grid& g = u.grid;
    const Eigen::ArrayXd rho = u.re.square() + u.im.square();
    return dirichlet_energy(g, u.re) + dirichlet_energy(g, u.im) + 0.25 * (1.0 - rho).square().sum() * g.cell_volume();
}

Vec momentum(const Field& u) {
    const Grid& g = u.grid;
    Vec P(g.spatial_dim());
    for (int a = 0; a < g.spatial_dim(); ++a)
        P[a] = -((u.re - 1.0) * derivative(g, u.im, a)).sum() * g.cell_volume();
    return P;
}

Vec extended_momentum(const Field& w, const ModelParams& mp) {
    const Grid& g = w.grid;
    const Eigen::ArrayXd sq = w.im.square();
    const Eigen::ArrayXd dens = w.re + 0.5 * (sq - apply_chi(g, sq, mp));
    Vec P(g.spatial_dim());
    for (int a = 0; a < g.spatial_dim(); ++a) P[a] = -(dens * derivative(g, w.im, a)).sum() * g.cell_volume();
    return P;
}

double energy_momentum(const Field& u, const Vec& c) { return energy(u) + c.dot(momentum(u)); }

Field psi_forward(const Field& w, const ModelParams& mp) {
    Field u = w;
    u.re += 1.0 - 0.5 * apply_chi(w.grid, w.im.square(), mp);
    return u;
}

Field psi_inverse(const Field& u, const ModelParams& mp) {
    Field w = u;
    w.re += -1.0 + 0.5 * apply_chi(u.grid, u.im.square(), mp);
    return w;
}

Field traveling_frame_rhs(const Field& U, const Vec& c) {
    const Grid& g = U.grid;
    if (c.size() != g.spatial_dim()) throw ShapeError("velocity has wrong dimension");
    const Eigen::ArrayXd nl = 1.0 - U.re.square() - U.im.square();
    Field out(g);
    out.re = -(laplacian(g, U.im) + nl * U.im);
    out.im = laplacian(g, U.re) + nl * U.re;
    if (!c.isZero(0.0)) out += directional_derivative(U, c);
    return out;
}

Field energy_momentum_gradient(const Field& U, const Vec& c) {
    // J^{-1} = -J
    return apply_J(traveling_frame_rhs(U, c)) * -1.0;
}

Field hessian_apply(const Field& U, const Vec& c, const Field& f) {
    const Grid& g = U.grid;
    U.check_conforming(f);
    const Eigen::ArrayXd u2 = U.re.square(), v2 = U.im.square(), uv = U.re * U.im;
    Field out(g);
    out.re = -laplacian(g, f.re) + (-1.0 + 3.0 * u2 + v2) * f.re + 2.0 * uv * f.im;
    out.im = -laplacian(g, f.im) + (-1.0 + u2 + 3.0 * v2) * f.im + 2.0 * uv * f.re;
    if (!c.isZero(0.0)) {
        out.re -= directional_derivative(g, f.im, c);
        out.im += directional_derivative(g, f.re, c);
    }
    return out;
}

std::vector<int> active_axes(const Field& U, double tol) {
    std::vector<int> out;
    const double scale = std::max(1.0, sup_abs(U));
    for (int a = 0; a < U.grid.spatial_dim(); ++a) {
        const Field d = derivative(U, a);
        if (sup_abs(d) > tol * scale) out.push_back(a);
    }
    return out;
}

}  // namespace imk
