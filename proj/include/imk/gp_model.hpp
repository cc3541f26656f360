#pragma once

#include "imk/field.hpp"
#include "imk/fourier.hpp"

#include <string>
#include <vector>

namespace imk {

/// Smooth radial cut-off: 1 on |k| <= radius/2, 0 for |k| >= radius, with an
/// exp-based C-infinity transition.
double chi_bump(double kabs, double radius);

struct ModelParams {
    double chi_radius = 1.0;
    void validate() const;
    double chi(const Wavevector& w) const;
};

/// chi(D) applied to a real array.
Eigen::ArrayXd apply_chi(const Grid& g, const Eigen::ArrayXd& x, const ModelParams& mp);

/// 1/2 int |grad u|^2 + 1/4 int (1 - |u|^2)^2.
double energy(const Field& u);
/// P_j(u) = -int (u1 - 1) d_j u2, one entry per spatial axis.
Vec momentum(const Field& u);
/// -int [w1 + (1 - chi(D)) w2^2 / 2] grad w2.
Vec extended_momentum(const Field& w, const ModelParams& mp);
/// E + c.P
double energy_momentum(const Field& u, const Vec& c);

/// u = 1 + w with chi(D)(w2^2)/2 subtracted from the real part.
Field psi_forward(const Field& w, const ModelParams& mp);
Field psi_inverse(const Field& u, const ModelParams& mp);

/// Traveling-frame vector field dU/dt = c.grad U + i(Lap U + (1 - |U|^2) U).
Field traveling_frame_rhs(const Field& U, const Vec& c);

/// Gradient of E + c.P at U; its zeros are traveling waves.
Field energy_momentum_gradient(const Field& U, const Vec& c);

/// Second variation of E + c.P at U applied to f:
/// [[-Lap - 1 + 3u^2 + v^2, -c.grad + 2uv], [c.grad + 2uv, -Lap - 1 + u^2 + 3v^2]] f.
Field hessian_apply(const Field& U, const Vec& c, const Field& f);

/// Axes along which a field is not constant (to lattice tolerance).
std::vector<int> active_axes(const Field& U, double tol = 1e-12);

struct WaveProfile {
    Vec c;
    Field U;
    double residual = 0.0;
    double boundary_deviation = 0.0;
    int newton_iterations = 0;
    std::vector<double> residual_history;
};

struct NewtonOptions {
    double tol = 1e-9;
    int max_iter = 40;
    double boundary_tol = 1e-6;
    double gmres_tol = 1e-12;
    int gmres_restart = 200;
    int gmres_max_iter = 4000;
};

/// Largest deviation of |U| from 1 on the box faces normal to active axes.
double boundary_deviation(const Field& U);

/// Newton iteration on the traveling-wave equation with translation and phase
/// gauges pinned; linear solves use restarted GMRES preconditioned by the
/// constant-coefficient part of the Hessian.
WaveProfile solve_traveling_wave(const Vec& c, const Field& seed, const NewtonOptions& opt = {});

/// Total phase change of a speed-s gray soliton across its core.
double gray_phase_jump(double s);

/// Box lengths for which the boosted gray soliton of speed c is periodic:
/// c L - jump(c) = 2 pi m. Returns the admissible length closest to `requested`
/// and the winding m.
std::pair<double, int> admissible_box_length(double c, double requested);

/// Closed-form seed along axis 0: the boosted gray soliton e^{icx} V(x) for c != 0
/// (box must be admissible), or a black-soliton pair for c = 0. The profile is
/// extended trivially along the remaining axes.
Field soliton_seed(const Grid& g, double c);

/// Seed, then Newton-polish, the soliton of speed c along axis 0.
WaveProfile soliton_profile(const Grid& g, double c, const NewtonOptions& opt = {});

/// Field snapshot at `path` plus a JSON sidecar `path.json` with the velocity,
/// residual and grid.
void save_wave_profile(const std::string& path, const WaveProfile& p);
WaveProfile load_wave_profile(const std::string& path);

/// Copy a profile onto a grid with extra trailing axes (constant along them).
Field extend_profile(const Field& U, const Grid& target);

}  // namespace imk
