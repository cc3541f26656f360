// Gray soliton stretched along a transverse period: the unstable eigenvalue of the
// splitting against the growth of a random perturbation under the linear flow.
#include "imk/bundle.hpp"
#include "imk/decomposition.hpp"
#include "imk/norms.hpp"
#include "imk/propagator.hpp"

#include <cstdio>
#include <numbers>
#include <random>

using namespace imk;

int main() {
    const double c = 0.5;
    const double L = admissible_box_length(c, 32.0).first;
    const WaveProfile line = soliton_profile(Grid({96}, {L}), c);
    const Grid plane({96, 8}, {L, 4.0 * std::numbers::pi});
    WaveProfile wave;
    wave.U = extend_profile(line.U, plane);
    wave.c = Vec::Zero(2);
    wave.c[0] = c;

    auto space = std::make_shared<PhaseSpace>(gp_phase_space(wave));
    auto dec = std::make_shared<Decomposition>(decompose(space));
    std::printf("d = %d, d1 = %d, dim ker = %d, n_minus = %d, lambda = %.6f\n", dec->d, dec->d1, dec->dim_ker,
                dec->n_minus, dec->lambda);
    const GpBundle b(dec, wave);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    Field noise(plane);
    for (Eigen::Index i = 0; i < noise.re.size(); ++i) {
        noise.re[i] = n01(rng);
        noise.im[i] = n01(rng);
    }
    noise.re = band_limit(plane, noise.re, 0.3);
    noise.im = band_limit(plane, noise.im, 0.3);
    const Vec V0 = stack(noise) * (1e-6 / sup_abs(noise));

    IntegratorConfig ic;
    ic.dt = 0.01;
    ic.horizon = 60.0;
    ic.record_every = 100;
    const Trajectory tr = linearized_flow(*b.ops(Vec::Zero(b.dims().k)), V0, ic);
    std::vector<double> size;
    std::printf("%8s %14s\n", "t", "|V|_X1");
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        size.push_back(x1_norm(plane, tr.x[i]));
        std::printf("%8.2f %14.6e\n", tr.t[i], size.back());
    }
    const RateFit fit = fit_log_rate(tr.t, size, 30.0, 60.0);
    std::printf("fitted growth %.6f vs eigenvalue %.6f (%.2f%%)\n", fit.rate, dec->lambda,
                100.0 * std::abs(fit.rate / dec->lambda - 1.0));
}
