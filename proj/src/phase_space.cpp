#include "imk/phase_space.hpp"

#include "imk/errors.hpp"
#include "imk/norms.hpp"

namespace imk {

PhaseSpace gp_phase_space(const WaveProfile& profile, Eigen::Index dense_cap) {
    const Grid g = profile.U.grid;
    const auto n = static_cast<Eigen::Index>(g.size());
    if (2 * n > dense_cap)
        throw ShapeError("lattice has " + std::to_string(2 * n) + " unknowns; dense cap is " +
                         std::to_string(dense_cap));
    PhaseSpace ps;
    ps.dim = 2 * n;
    ps.weight = g.cell_volume();
    ps.grid = g;

    const LinOpSet ops(profile, Vec::Zero(g.spatial_dim()));
    ps.L.resize(2 * n, 2 * n);
    Vec e = Vec::Zero(2 * n);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        e[j] = 1.0;
        ps.L.col(j) = ops.apply_L(e);
        e[j] = 0.0;
    }
    ps.L = 0.5 * (ps.L + ps.L.transpose()).eval();

    ps.J = Mat::Zero(2 * n, 2 * n);
    ps.J.topRightCorner(n, n).setIdentity();
    ps.J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);

    const auto axes = active_axes(profile.U);
    ps.translations = static_cast<int>(axes.size());
    ps.generators.resize(2 * n, ps.translations);
    for (int j = 0; j < ps.translations; ++j) ps.generators.col(j) = stack(derivative(profile.U, axes[j]));

    ps.riesz = [g](const Vec& v) { return x1_riesz(g, v); };
    ps.translate = [g](const Vec& v, const Vec& y) { return stack(translate(unstack(g, v), y)); };
    ps.group_band = [g](const Vec& v) { return stack(drop_nyquist(unstack(g, v))); };
    ps.derivative = [g](const Vec& v, const Vec& z) { return stack(directional_derivative(unstack(g, v), z)); };
    return ps;
}

}  // namespace imk
