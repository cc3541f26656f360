#pragma once

#include "imk/dense.hpp"
#include "imk/phase_space.hpp"

#include <array>
#include <complex>
#include <memory>
#include <string>

namespace imk {

/// Finite-dimensional blocks of the invariant splitting, in storage order.
/// The centre fibre `E` is the common annihilator of all dual functionals.
enum class Block { T = 0, D1 = 1, D2 = 2, Plus = 3, Minus = 4, E = 5 };
constexpr int kFiniteBlocks = 5;
const char* block_name(Block b);

struct SpectrumEntry {
    std::complex<double> value;
    /// unstable, stable, kernel, krein-negative or center
    std::string kind;
    /// <L re, re> + <L im, im> for the unit eigenvector.
    double krein = 0.0;
    /// Eigenvalue condition number ||l|| ||r|| / |l^* r|.
    double condition = 1.0;
};

struct DecomposeOptions {
    /// Relative spectral threshold: |Re mu| > tol * ||JL|| is hyperbolic, |mu| <= tol * ||L|| is kernel.
    double tol = 1e-6;
    /// Threshold on the normalised tail form below which a chain is considered longer than two.
    double chain_tol = 1e-6;
    /// Largest accepted condition number of the dual Gram matrix.
    double max_gram_condition = 1e8;
    /// Perturbation size for the pseudospectral radii in the report, relative to ||JL||.
    double pseudo_eps = 1e-10;
};

class Decomposition {
public:
    std::shared_ptr<const PhaseSpace> space;
    int d = 0, d1 = 0, d2 = 0, dim_ker = 0, n_minus = 0, translations = 0;
    /// Basis V and duals zeta, columns ordered T, d1, d2, +, -.
    Mat V, Z;
    std::array<Eigen::Index, kFiniteBlocks + 1> offsets{};
    /// Full coefficient matrix <zeta_i, JL V_j>.
    Mat M_full;
    double lambda = 0.0;
    double norm_JL = 0.0;
    std::vector<SpectrumEntry> spectrum;
    /// d1 == n_minus + dim_ker - translations - d
    bool index_consistent = false;
    /// Largest real part inside the pseudo_eps pseudospectrum (first-order estimate) of
    /// the nonzero eigenvalues on the imaginary axis. Kernel eigenvalues are excluded:
    /// they are defective and the first-order estimate does not apply.
    double center_pseudo_abscissa = 0.0;

    Eigen::Index size(Block b) const;
    Eigen::Index finite_size() const { return V.cols(); }
    Mat basis(Block b) const;
    Mat duals(Block b) const;
    /// Matrix of Pi^to JL restricted to `from`, in the stored bases.
    Mat M(Block to, Block from) const;

    /// Bases and duals translated by y (columns).
    Mat basis_at(const Vec& y, Block b) const;
    Mat duals_at(const Vec& y, Block b) const;

    /// Coefficients <zeta_j(. + y), w> of a finite block.
    Vec coefficients(const Vec& y, Block b, const Vec& w) const;
    /// The projection of w onto the block at base y (for E: identity minus the finite-rank part).
    Vec project(const Vec& y, Block b, const Vec& w) const;
    /// y-derivative of the projection in direction z.
    Vec d_project(const Vec& y, Block b, const Vec& z, const Vec& w) const;
    /// Sum of all finite-rank projections.
    Vec project_finite(const Vec& y, const Vec& w) const;
    /// Reassemble a vector from per-block coefficients and a centre component.
    Vec assemble(const Vec& y, const std::array<Vec, kFiniteBlocks>& coeffs, const Vec& ve) const;
};

/// Builds the splitting from dense eigen-decompositions of L and JL.
/// Throws DegenerateSplitting when a kernel chain is longer than two or a
/// Krein signature is undecidable, and NoConvergence when the dual Gram matrix
/// is too ill conditioned.
Decomposition decompose(std::shared_ptr<const PhaseSpace> space, const DecomposeOptions& opt = {});

/// The m lowest modes of <L ., .> on the centre fibre at y = 0, orthonormal in
/// X1 (with the mean of the second component added to the X1 norm so the form
/// is definite on the torus). `values` are the Rayleigh quotients.
struct FibreModes {
    Vec values;
    Mat modes;
};
FibreModes lowest_fibre_modes(const Decomposition& dec, Eigen::Index m);

}  // namespace imk
