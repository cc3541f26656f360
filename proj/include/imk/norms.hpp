#pragma once

#include "imk/field.hpp"

#include <vector>

namespace imk {

struct NormKind {
    enum class Tag { X1, L2, Lp, W1p, BesovBlock, Qweighted };
    Tag tag = Tag::X1;
    double p = 2.0;
    double s = 0.0;
    double Q = 1.0;

    static NormKind x1() { return {Tag::X1}; }
    static NormKind l2() { return {Tag::L2}; }
    static NormKind lp(double p) { return {Tag::Lp, p}; }
    static NormKind w1p(double p) { return {Tag::W1p, p}; }
    static NormKind besov(double p, double s) { return {Tag::BesovBlock, p, s}; }
    static NormKind qweighted(double Q) { return {Tag::Qweighted, 2.0, 0.0, Q}; }
};

/// Norm of a field. Besov norms use B^s_{p,2} on the real part and the
/// homogeneous version on the imaginary part; Qweighted treats the field as
/// the fibre component of a bundle point (Q^2 times its X1 norm).
double norm(const Field& f, const NormKind& kind);

double x1_norm(const Field& f);
double x1_norm(const Grid& g, const Vec& stacked);
/// Inner product associated with the X1 norm: <(1-Lap) a1, b1> + <-Lap a2, b2>.
double x1_inner(const Grid& g, const Vec& a, const Vec& b);
/// Riesz map of the X1 inner product, (1 - Lap, -Lap) applied componentwise.
Vec x1_riesz(const Grid& g, const Vec& a);

/// L2 norm evaluated on the Fourier side (used to cross-check Parseval).
double l2_norm_spectral(const Field& f);

/// Dyadic shells 2^j <= |k| < 2^{j+1}. The inhomogeneous family starts with
/// the low block |k| < 1; the homogeneous family drops the zero mode and
/// starts at the shell containing the smallest nonzero wavenumber.
struct BesovBlock {
    int j;
    Eigen::ArrayXd part;
};
std::vector<BesovBlock> littlewood_paley(const Grid& g, const Eigen::ArrayXd& x, bool homogeneous);
double besov_norm(const Grid& g, const Eigen::ArrayXd& x, double p, double s, bool homogeneous);

double lp_norm(const Grid& g, const Eigen::ArrayXd& modulus, double p);

/// |y| + Q|a_d1| + Q^3|a_d2| + |a_plus| + Q^2 ||V||_X1.
double q_norm(const Vec& y, const Vec& a_d1, const Vec& a_d2, const Vec& a_plus, double v_x1, double Q);

struct SpacetimeNorm {
    double value = 0.0;
    bool admissible = true;
};

/// || e^{eta |pivot - t|} f ||_{L^p_t B^1_{q,2}} over uniformly spaced samples
/// starting at t0 with spacing dt. Trapezoid rule in time; p = inf takes the
/// maximum. `admissible` reports whether 2/p + n/q = n/2 with p, q >= 2.
SpacetimeNorm spacetime_norm(const std::vector<Field>& samples, double t0, double dt, double p, double q,
                             double eta, double pivot);

}  // namespace imk
