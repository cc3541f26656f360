#pragma once

#include "imk/decomposition.hpp"
#include "imk/linearization.hpp"

#include <array>
#include <memory>
#include <string>

namespace imk {

/// Sizes of the coordinate blocks of a bundle point.
struct BlockDims {
    int k = 0, d1 = 0, d2 = 0, d = 0;
    Eigen::Index fibre = 0;
    Eigen::Index packed_size() const { return k + d1 + d2 + 2 * d + fibre; }
};

/// (y, a_d1, a_d2, a_plus, a_minus, V). On the bundle V lies in the centre
/// fibre at y; the cut-off system also accepts arbitrary V.
struct BundlePoint {
    Vec y, a_d1, a_d2, a_plus, a_minus, V;

    static BundlePoint zero(const BlockDims& dims);
    BlockDims dims() const;
    bool finite() const;
    /// Coefficient vector of a finite block other than T.
    const Vec& coeffs(Block b) const;
    Vec& coeffs(Block b);
    /// Concatenation (a_d1, a_d2, a_plus, a_minus).
    Vec transverse() const;
};

Vec pack(const BundlePoint& p);
BundlePoint unpack(const Vec& x, const BlockDims& dims);
BundlePoint operator+(const BundlePoint& a, const BundlePoint& b);
BundlePoint operator*(double s, const BundlePoint& a);

/// Cut-off radius delta, graph Lipschitz bound mu, anisotropy Q and decay margin eta.
struct CutoffParams {
    double delta = 1e-2;
    double mu = 0.1;
    double Q = 4.0;
    double eta = 0.0;

    /// Defaults with eta = min(1/2, lambda/4).
    static CutoffParams defaults(double lambda);
    /// delta < 1, Q > 1, mu < 1/5, 0 < eta < min(1, lambda) (the last only when lambda > 0).
    void validate(double lambda) const;
};

/// Smooth step equal to 1 on |x| <= 1 and 0 on |x| >= 3, quintic in between, |gamma'| <= 15/16.
double cutoff_gamma(double x);
double cutoff_gamma_prime(double x);

/// The smallness inequalities of the construction evaluated with a surrogate constant C.
struct ParameterGate {
    std::array<double, 6> margin{};  // left side divided by the bound; < 1 passes
    std::array<bool, 6> pass{};
    bool all() const;
    std::string describe() const;
};
ParameterGate check_parameter_gates(const CutoffParams& p, double lambda, int d1, double C = 1.0, int jet_order = 1);

/// |a_d1| + |a_d2| + |a_plus| + |a_minus| + ||V||.
double transverse_size(const BundlePoint& p, double v_norm);

/// Anything that supplies the cut-off vector field on the extended space,
/// so the invariant-manifold solver can run on lattice and toy models alike.
class CutoffSystem {
public:
    virtual ~CutoffSystem() = default;
    virtual BlockDims dims() const = 0;
    /// Spectral gap: the smallest real part of the unstable block.
    virtual double lambda() const = 0;
    virtual Mat block_matrix(Block b) const = 0;
    /// The full cut-off vector field, including the a_minus and a_plus equations.
    virtual BundlePoint cutoff_rhs(const BundlePoint& W, const CutoffParams& params) const = 0;
    virtual double fibre_norm(const Vec& V) const = 0;
    /// Inner product inducing fibre_norm (polarisation by default).
    virtual double fibre_inner(const Vec& a, const Vec& b) const;
    /// Centre-fibre projection at base y.
    virtual Vec fibre_project(const Vec& y, const Vec& V) const = 0;
    /// Translate a fibre vector at base y back to the reference fibre.
    virtual Vec to_reference(const Vec& y, const Vec& V) const = 0;
    virtual Vec from_reference(const Vec& y, const Vec& V) const = 0;
    /// m directions in the reference fibre, orthonormal for fibre_norm.
    virtual Mat fibre_directions(Eigen::Index m) const = 0;
    /// Stiff linear part S of the fibre equation and its flow exp(tS), used by
    /// integrating-factor schemes. Defaults to S = 0.
    virtual Vec stiff_apply(const Vec& V) const { return Vec::Zero(V.size()); }
    virtual Vec stiff_exponential(double /*t*/, const Vec& V) const { return V; }

    /// Hamiltonian structure, when present: twice the energy excess over the
    /// base point and its quadratic part <L^e V, V> + 2 <L_{+-} a_minus, a_plus>.
    virtual bool has_energy() const { return false; }
    virtual double energy_excess(const BundlePoint& /*W*/) const { return 0.0; }
    virtual double energy_quadratic(const BundlePoint& /*W*/) const { return 0.0; }
    /// d1 = d2 = 0 and the kernel is spanned by translations.
    virtual bool nondegenerate() const { return dims().d1 == 0 && dims().d2 == 0; }
};

struct ReducedRate {
    BundlePoint rate;
    int ydot_iterations = 0;
    /// True when the fixed-point iteration for the translation speed did not
    /// contract and the affine system was solved directly.
    bool direct_solve = false;
};

/// Bundle coordinates near the manifold of translates of a traveling wave:
///   U = U_c(. + y) + Z - chi(D)(Z_2^2)/2 e_1,   Z = K_y w = sum a^b V^b(. + y) + V^e.
class GpBundle : public CutoffSystem {
public:
    GpBundle(std::shared_ptr<const Decomposition> dec, WaveProfile profile, ModelParams mp = {},
             double chart_radius = 0.25);

    const Decomposition& decomposition() const { return *dec_; }
    const WaveProfile& profile() const { return profile_; }
    const Grid& grid() const { return profile_.U.grid; }
    const ModelParams& model() const { return mp_; }
    const std::vector<int>& axes() const { return axes_; }
    double chart_radius() const { return chart_radius_; }

    /// Spatial shift vector for translation coordinates along the active axes.
    Vec spatial(const Vec& y) const;
    std::shared_ptr<const LinOpSet> ops(const Vec& y) const;

    /// Z = sum a^b V^b(. + y) + V.
    Vec fibre_sum(const BundlePoint& p) const;
    /// w = K_y^{-1} Z.
    Field embed(const BundlePoint& p) const;
    Field chart(const BundlePoint& p) const;
    /// Newton solve for y on the translation constraint, then read the coefficients.
    BundlePoint chart_inverse(const Field& U, const Vec& y_guess) const;

    /// D_y Pi^e(z) (Pi^e V - (I - Pi^e) V) at base y.
    Vec second_fundamental_form(const Vec& y, const Vec& z, const Vec& V) const;
    /// Pi^e JL Pi^e at base y.
    Vec apply_Ae(const Vec& y, const Vec& V) const;
    /// Nonlinear remainder of the w-equation at base y and translation speed ydot.
    Field nonlinearity_G(const Vec& y, const Vec& ydot, const Field& w) const;

    ReducedRate reduced_rhs(const BundlePoint& p) const;

    /// E + c.P of the chart image.
    double energy_of(const BundlePoint& p) const;

    BlockDims dims() const override { return dims_; }
    double lambda() const override { return dec_->lambda; }
    Mat block_matrix(Block b) const override { return dec_->M(b, b); }
    BundlePoint cutoff_rhs(const BundlePoint& W, const CutoffParams& params) const override;
    double fibre_norm(const Vec& V) const override;
    double fibre_inner(const Vec& a, const Vec& b) const override;
    Vec fibre_project(const Vec& y, const Vec& V) const override;
    Vec to_reference(const Vec& y, const Vec& V) const override;
    Vec from_reference(const Vec& y, const Vec& V) const override;
    Mat fibre_directions(Eigen::Index m) const override;
    /// J L_inf and its exact Fourier-side flow.
    Vec stiff_apply(const Vec& V) const override;
    Vec stiff_exponential(double t, const Vec& V) const override;
    bool has_energy() const override { return true; }
    double energy_excess(const BundlePoint& W) const override;
    double energy_quadratic(const BundlePoint& W) const override;
    bool nondegenerate() const override;

    /// True when the cut-off system carries off-diagonal blocks (d1 + d2 > 0).
    bool offdiagonal_branch() const { return dims_.d1 + dims_.d2 > 0; }

private:
    struct Frame;
    Frame frame(const Vec& y) const;
    Vec G_stacked(const Frame& f, const Vec& Z, const Vec& ydot) const;

    std::shared_ptr<const Decomposition> dec_;
    WaveProfile profile_;
    ModelParams mp_;
    double chart_radius_;
    std::vector<int> axes_;
    BlockDims dims_;
    mutable std::shared_ptr<LinOpCache> cache_;
};

}  // namespace imk
