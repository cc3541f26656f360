#pragma once

#include "imk/linearization.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace imk {

/// A finite-dimensional linear Hamiltonian phase space with a translation
/// action. States are plain vectors; pairings are `weight * a.dot(b)`.
struct PhaseSpace {
    Eigen::Index dim = 0;
    double weight = 1.0;
    /// Number of translation directions (columns of `generators`).
    int translations = 0;
    /// Dense symmetric Hessian and the symplectic matrix J (J^T = -J, J^2 = -I).
    Mat L;
    Mat J;
    /// Translation generators at the base point (one column per active axis).
    Mat generators;
    /// Riesz map of the X1 inner product, x1_inner(a, b) = weight * a.dot(riesz(b)).
    std::function<Vec(const Vec&)> riesz;
    /// Tangent action of the translation group: v -> v(. + y).
    std::function<Vec(const Vec&, const Vec&)> translate;
    /// Its derivative in direction z: v -> z.grad v.
    std::function<Vec(const Vec&, const Vec&)> derivative;
    /// Projection onto the subspace on which `translate` is an exact group
    /// action (identity when absent).
    std::function<Vec(const Vec&)> group_band;
    /// Present for lattice fields: the grid the vectors live on.
    std::optional<Grid> grid;

    double pair(const Vec& a, const Vec& b) const { return weight * a.dot(b); }
    double x1_inner(const Vec& a, const Vec& b) const { return weight * a.dot(riesz(b)); }
    double x1_norm(const Vec& a) const { return std::sqrt(std::max(0.0, x1_inner(a, a))); }
    Mat JL() const { return J * L; }
};

/// Phase space of the linearisation at a traveling wave. Translation axes are
/// those along which the profile varies. Dense matrices are materialised, so
/// the lattice must have at most `dense_cap` real unknowns.
PhaseSpace gp_phase_space(const WaveProfile& profile, Eigen::Index dense_cap = 16384);

}  // namespace imk
