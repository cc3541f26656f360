#pragma once

#include "imk/gp_model.hpp"

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>

namespace imk {

/// Linear operators at the translated wave U_c(. + y). All applications are matrix-free.
class LinOpSet {
public:
    LinOpSet(const WaveProfile& profile, const Vec& y, const ModelParams& mp = {});

    const Grid& grid() const { return U_.grid; }
    const Vec& velocity() const { return c_; }
    const Vec& shift() const { return y_; }
    const ModelParams& model() const { return mp_; }
    /// The translated profile U_c(. + y).
    const Field& profile() const { return U_; }

    /// (w1 - chi(D)(v w2), w2) with v the imaginary part of the translated profile.
    Field apply_K(const Field& w) const;
    Field apply_K_inv(const Field& w) const;
    /// Transposes of K and K^{-1} for the lattice L2 inner product.
    Field apply_K_adjoint(const Field& w) const;
    Field apply_K_inv_adjoint(const Field& w) const;
    Field apply_L(const Field& f) const;
    Field apply_JL(const Field& f) const;
    /// Constant-coefficient part: J [[2 - Lap, -c.grad], [c.grad, -Lap]].
    Field apply_JL_inf(const Field& f) const;
    /// Pointwise remainder JL - JL_inf.
    Field apply_Q(const Field& f) const;

    Vec apply_L(const Vec& f) const { return stack(apply_L(unstack(grid(), f))); }
    Vec apply_JL(const Vec& f) const { return stack(apply_JL(unstack(grid(), f))); }

    /// Entries (q11, q12, q21, q22) of the remainder matrix at every lattice point.
    std::array<Eigen::ArrayXd, 4> remainder_coefficients() const { return q_; }

private:
    Field U_;
    Vec c_, y_;
    ModelParams mp_;
    std::array<Eigen::ArrayXd, 4> q_;
};

/// Symbol of JL_inf at wavevector k: eigenvalues i(c.k +- |k| sqrt(2 + |k|^2)).
std::array<std::complex<double>, 2> jl_inf_eigenvalues(const Vec& c, const Vec& k);

/// LinOpSets keyed by the shift rounded to 1e-12, shared between callers.
class LinOpCache {
public:
    LinOpCache(WaveProfile profile, ModelParams mp = {}) : profile_(std::move(profile)), mp_(mp) {}
    std::shared_ptr<const LinOpSet> at(const Vec& y);
    const WaveProfile& profile() const { return profile_; }
    std::size_t size() const;

private:
    WaveProfile profile_;
    ModelParams mp_;
    mutable std::mutex mu_;
    std::map<std::vector<long long>, std::shared_ptr<const LinOpSet>> entries_;
};

/// Power-iteration estimate of the X1 -> X1 operator norm given the operator and
/// its lattice L2 transpose. The zero mode of the second component, which has
/// zero X1 norm, is projected out.
double x1_operator_norm(const Grid& g, const std::function<Field(const Field&)>& op,
                        const std::function<Field(const Field&)>& adjoint, std::mt19937_64& rng,
                        int iterations = 40);

}  // namespace imk
