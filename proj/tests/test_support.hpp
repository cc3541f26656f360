#pragma once

#include "imk/field.hpp"
#include "imk/fourier.hpp"
#include "imk/gp_model.hpp"

#include <map>
#include <mutex>

#include <random>

namespace imk::test {

/// Smooth random field: Gaussian lattice noise passed through a low-pass filter.
inline Field random_smooth_field(const Grid& g, std::mt19937_64& rng, double amplitude = 1.0,
                                 double fraction = 0.3) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Field f(g);
    for (Eigen::Index i = 0; i < f.re.size(); ++i) {
        f.re[i] = n01(rng);
        f.im[i] = n01(rng);
    }
    f.re = band_limit(g, f.re, fraction);
    f.im = band_limit(g, f.im, fraction);
    const double scale = std::max(sup_abs(f), 1e-300);
    return f * (amplitude / scale);
}

inline double max_abs_diff(const Field& a, const Field& b) { return sup_abs(a - b); }

/// Converged c = 0.5 soliton on an admissible 1D box, memoised per resolution.
inline const WaveProfile& gray_profile(int n) {
    static std::map<int, WaveProfile> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        const double L = admissible_box_length(0.5, 32.0).first;
        it = cache.emplace(n, soliton_profile(Grid({n}, {L}), 0.5)).first;
    }
    return it->second;
}

/// A profile carrying the given field and velocity without a Newton solve.
inline WaveProfile raw_profile(const Field& U, const Vec& c) {
    WaveProfile p;
    p.U = U;
    p.c = c;
    return p;
}

}  // namespace imk::test
