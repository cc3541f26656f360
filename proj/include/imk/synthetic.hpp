#pragma once

#include "imk/bundle.hpp"
#include "imk/phase_space.hpp"

#include <functional>

namespace imk {

/// Linear part of the planted Hamiltonian test system on [q; p] coordinates:
/// one hyperbolic pair (rate lambda), one oscillator per entry of `omegas`,
/// and a translation pair whose kernel direction is the last q coordinate.
PhaseSpace planted_phase_space(double lambda, const std::vector<double>& omegas = {1.0});

/// Charted polynomial system on (y, a_plus, a_minus, V) with linear part
/// a_plus' = lambda a_plus, a_minus' = -lambda a_minus, V' = A V and a
/// nonlinear remainder N. The fibre is a fixed Euclidean space, so
/// translations act trivially and the second fundamental form vanishes.
class ToySystem : public CutoffSystem {
public:
    using Remainder = std::function<BundlePoint(const BundlePoint&)>;
    using Scalar = std::function<double(const BundlePoint&)>;

    ToySystem(int k, int d, double lambda, Mat A, Remainder N, Scalar energy = {}, Scalar quadratic = {});

    /// a_plus' = lambda a_plus, a_minus' = -lambda a_minus + a_plus^2 with one neutral fibre direction.
    static ToySystem quadratic(double lambda);
    /// Two-dimensional oscillating fibre with quadratic couplings in every equation.
    static ToySystem coupled(double lambda, double omega, double kappa = 1.0);
    /// Hamiltonian H = lambda a_plus a_minus + omega |V|^2 / 2 + kappa K with cubic K.
    static ToySystem hamiltonian(double lambda, double omega, double kappa = 1.0);
    /// The time-reversed system with the roles of a_plus and a_minus exchanged.
    ToySystem reversed() const;

    /// Uncut vector field.
    BundlePoint full_rhs(const BundlePoint& W) const;
    const Mat& fibre_matrix() const { return A_; }

    BlockDims dims() const override { return dims_; }
    double lambda() const override { return lambda_; }
    Mat block_matrix(Block b) const override;
    BundlePoint cutoff_rhs(const BundlePoint& W, const CutoffParams& params) const override;
    double fibre_norm(const Vec& V) const override { return V.norm(); }
    double fibre_inner(const Vec& a, const Vec& b) const override { return a.dot(b); }
    Vec fibre_project(const Vec&, const Vec& V) const override { return V; }
    Vec to_reference(const Vec&, const Vec& V) const override { return V; }
    Vec from_reference(const Vec&, const Vec& V) const override { return V; }
    Mat fibre_directions(Eigen::Index m) const override;
    bool has_energy() const override { return static_cast<bool>(energy_); }
    double energy_excess(const BundlePoint& W) const override;
    double energy_quadratic(const BundlePoint& W) const override;

private:
    BlockDims dims_;
    double lambda_;
    Mat A_;
    Remainder N_;
    Scalar energy_, quadratic_;
};

}  // namespace imk
