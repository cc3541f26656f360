#include "imk/errors.hpp"
#include "imk/gp_model.hpp"
#include "imk/matrix_free.hpp"
#include "imk/snapshot.hpp"

#include <json.hpp>

#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace imk {

double boundary_deviation(const Field& U) {
    const Grid& g = U.grid;
    const auto axes = active_axes(U);
    double dev = 0.0;
    for (int a : axes) {
        std::size_t stride = 1;
        for (int b = g.spatial_dim() - 1; b > a; --b) stride *= g.dims[b];
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            if ((idx / stride) % g.dims[a] != 0) continue;
            const auto i = static_cast<Eigen::Index>(idx);
            dev = std::max(dev, std::abs(std::hypot(U.re[i], U.im[i]) - 1.0));
        }
    }
    return dev;
}

namespace {

/// Inverse of the constant-coefficient Hessian symbol [[2+k^2, -i c.k], [i c.k, k^2 + eps]].
Vec precondition(const Grid& g, const Vec& c, const Vec& b) {
    auto F = fourier_for(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    const CArray f1 = F->forward(b.head(n).array());
    const CArray f2 = F->forward(b.tail(n).array());
    Eigen::ArrayXd ck = Eigen::ArrayXd::Zero(F->spectrum_size());
    for (int a = 0; a < g.spatial_dim(); ++a) ck += c[a] * F->kd(a);
    const Eigen::ArrayXd k2 = F->k2();
    constexpr double eps = 0.05;
    const Eigen::ArrayXd det = (2.0 + k2) * (k2 + eps) - ck.square();
    const cplx I(0.0, 1.0);
    const CArray g1 = ((k2 + eps).cast<cplx>() * f1 + I * ck.cast<cplx>() * f2) / det.cast<cplx>();
    const CArray g2 = (-I * ck.cast<cplx>() * f1 + (2.0 + k2).cast<cplx>() * f2) / det.cast<cplx>();
    Vec out(2 * n);
    out.head(n) = F->backward(g1).matrix();
    out.tail(n) = F->backward(g2).matrix();
    return out;
}

/// L2-orthonormal basis of the gauge directions (active translations and phase).
Mat gauge_basis(const Field& U) {
    const Grid& g = U.grid;
    std::vector<Vec> cols;
    for (int a : active_axes(U)) cols.push_back(stack(derivative(U, a)));
    cols.push_back(stack(Field(g, -U.im, U.re)));
    Mat B(2 * static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) B.col(static_cast<Eigen::Index>(j)) = cols[j];
    const double w = std::sqrt(g.cell_volume());
    Eigen::HouseholderQR<Mat> qr(B * w);
    return qr.householderQ() * Mat::Identity(B.rows(), B.cols()) / w;
}

}  // namespace

WaveProfile solve_traveling_wave(const Vec& c, const Field& seed, const NewtonOptions& opt) {
    const Grid& g = seed.grid;
    if (c.size() != g.spatial_dim()) throw ShapeError("velocity has wrong dimension");
    if (c.norm() >= std::numbers::sqrt2) throw ParameterError("no subsonic traveling wave for |c| >= sqrt(2)");

    WaveProfile out;
    out.c = c;
    Field U = seed;
    const double dV = g.cell_volume();
    const auto n2 = 2 * static_cast<Eigen::Index>(g.size());

    auto residual_of = [&](const Field& V) { return sup_abs(traveling_frame_rhs(V, c)); };
    double res = residual_of(U);
    out.residual_history.push_back(res);

    for (int it = 0; it < opt.max_iter && res > opt.tol; ++it) {
        const Mat Gb = gauge_basis(U);
        const Vec rhs = -stack(energy_momentum_gradient(U, c));
        MatrixFreeOperator A(n2, [&](const Vec& x) {
            Vec y = stack(hessian_apply(U, c, unstack(g, x)));
            y += Gb * (Gb.transpose() * x * dV);
            return y;
        });
        Eigen::GMRES<MatrixFreeOperator, CallablePreconditioner> gmres;
        gmres.set_restart(opt.gmres_restart);
        gmres.setMaxIterations(opt.gmres_max_iter);
        gmres.setTolerance(opt.gmres_tol);
        gmres.compute(A);
        gmres.preconditioner().set([&](const Vec& b) { return precondition(g, c, b); });
        Vec delta = gmres.solve(rhs);
        delta -= Gb * (Gb.transpose() * delta * dV);

        double step = 1.0;
        Field trial = U + unstack(g, delta);
        double trial_res = residual_of(trial);
        while (trial_res > res && step > 1.0 / 64.0) {
            step *= 0.5;
            trial = U + unstack(g, step * delta);
            trial_res = residual_of(trial);
        }
        U = std::move(trial);
        res = trial_res;
        out.residual_history.push_back(res);
        out.newton_iterations = it + 1;
        if (!std::isfinite(res)) break;
    }
    if (!(res <= opt.tol))
        throw NoConvergence("traveling-wave Newton iteration did not converge", out.residual_history);
    out.U = std::move(U);
    out.residual = res;
    out.boundary_deviation = boundary_deviation(out.U);
    if (out.boundary_deviation > opt.boundary_tol)
        throw DomainError("profile does not approach |U| = 1 at the box boundary (deviation " +
                          std::to_string(out.boundary_deviation) + ")");
    return out;
}

double gray_phase_jump(double s) {
    const double a = std::sqrt(1.0 - 0.5 * s * s);
    const double b = s / std::numbers::sqrt2;
    return std::atan2(b, a) - std::atan2(b, -a);
}

std::pair<double, int> admissible_box_length(double c, double requested) {
    if (c == 0.0) return {requested, 0};
    // boosted profile e^{icx} V_{-c}: need c L + jump(-c) = 2 pi m
    const double jump = gray_phase_jump(-c);
    double best = std::numeric_limits<double>::infinity();
    int best_m = 0;
    const int mmax = static_cast<int>(std::abs(c) * requested / (2.0 * std::numbers::pi)) + 3;
    for (int m = -mmax; m <= mmax; ++m) {
        const double L = (2.0 * std::numbers::pi * m - jump) / c;
        if (L > 0.0 && std::abs(L - requested) < std::abs(best - requested)) {
            best = L;
            best_m = m;
        }
    }
    return {best, best_m};
}

Field soliton_seed(const Grid& g, double c) {
    const Eigen::ArrayXd x = g.coordinate_array(0);
    const double L = g.lengths[0];
    Field U(g);
    if (c == 0.0) {
        const double s = 1.0 / std::numbers::sqrt2;
        U.re = ((x + 0.25 * L) * s).tanh() * ((0.25 * L - x) * s).tanh();
        return U;
    }
    const auto [Ladm, m] = admissible_box_length(c, L);
    (void)m;
    if (std::abs(Ladm - L) > 1e-9 * L)
        throw ParameterError("box length " + std::to_string(L) + " is not admissible for c = " + std::to_string(c) +
                             "; nearest admissible length is " + std::to_string(Ladm));
    const double s = -c;
    const double a = std::sqrt(1.0 - 0.5 * s * s);
    const double b = s / std::numbers::sqrt2;
    const Eigen::ArrayXd vr = a * (a * x / std::numbers::sqrt2).tanh();
    const Eigen::ArrayXd cs = (c * x).cos(), sn = (c * x).sin();
    U.re = cs * vr - sn * b;
    U.im = sn * vr + cs * b;
    return U;
}

WaveProfile soliton_profile(const Grid& g, double c, const NewtonOptions& opt) {
    Vec cv = Vec::Zero(g.spatial_dim());
    cv[0] = c;
    return solve_traveling_wave(cv, soliton_seed(g, c), opt);
}

Field extend_profile(const Field& U, const Grid& target) {
    const Grid& g = U.grid;
    if (target.spatial_dim() < g.spatial_dim()) throw ShapeError("target grid has fewer axes");
    for (int a = 0; a < g.spatial_dim(); ++a)
        if (target.dims[a] != g.dims[a] || target.lengths[a] != g.lengths[a])
            throw ShapeError("target grid does not extend the profile grid");
    const std::size_t rep = target.size() / g.size();
    Field out(target);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t r = 0; r < rep; ++r) {
            const auto t = static_cast<Eigen::Index>(i * rep + r);
            out.re[t] = U.re[static_cast<Eigen::Index>(i)];
            out.im[t] = U.im[static_cast<Eigen::Index>(i)];
        }
    return out;
}

void save_wave_profile(const std::string& path, const WaveProfile& p) {
    save_snapshot(path, p.U);
    nlohmann::json j;
    j["velocity"] = std::vector<double>(p.c.data(), p.c.data() + p.c.size());
    j["residual"] = p.residual;
    j["boundary_deviation"] = p.boundary_deviation;
    j["newton_iterations"] = p.newton_iterations;
    j["residual_history"] = p.residual_history;
    j["grid"] = {{"dims", p.U.grid.dims}, {"lengths", p.U.grid.lengths}};
    std::ofstream os(path + ".json");
    if (!os) throw std::runtime_error("cannot write " + path + ".json");
    os << j.dump(2) << '\n';
}

WaveProfile load_wave_profile(const std::string& path) {
    WaveProfile p;
    p.U = load_snapshot(path);
    std::ifstream is(path + ".json");
    if (!is) throw std::runtime_error("missing profile metadata " + path + ".json");
    const nlohmann::json j = nlohmann::json::parse(is);
    const auto c = j.at("velocity").get<std::vector<double>>();
    if (static_cast<int>(c.size()) != p.U.grid.spatial_dim()) throw ShapeError("velocity does not match the grid");
    p.c = Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
    p.residual = j.value("residual", 0.0);
    p.boundary_deviation = j.value("boundary_deviation", 0.0);
    p.newton_iterations = j.value("newton_iterations", 0);
    p.residual_history = j.value("residual_history", std::vector<double>{});
    return p;
}

}  // namespace imk
