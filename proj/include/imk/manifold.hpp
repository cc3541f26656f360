#pragma once

#include "imk/bundle.hpp"
#include "imk/propagator.hpp"

#include <string>
#include <vector>

namespace imk {

/// cu: graph a_minus = h(a_d1, a_d2, a_plus, V); cs: a_plus = h(a_d1, a_d2, a_minus, V);
/// centre: (a_plus, a_minus) = h(a_d1, a_d2, V).
enum class Side { Cu, Cs, Center };
Side parse_side(const std::string& s);
const char* side_name(Side s);

/// A graph over the transverse coordinates, sampled on a tensor grid and
/// interpolated multilinearly. Domain axes are ordered a_d1, a_d2, the free
/// hyperbolic block (cu: a_plus, cs: a_minus, none for the centre graph) and
/// the coordinates of V along `modes` reference fibre directions. Axes with a
/// single point are pinned at zero. The system must outlive the graph.
class GraphFn {
public:
    GraphFn(const CutoffSystem& sys, Side side, const CutoffParams& params, Eigen::Index modes,
            std::vector<int> points, double half_width = 0.0);
    /// Same number of points on every axis.
    static GraphFn uniform(const CutoffSystem& sys, Side side, const CutoffParams& params, Eigen::Index modes,
                           int points, double half_width = 0.0);
    /// Zero graph on the same domain.
    GraphFn zeros_like() const;

    const CutoffSystem& system() const { return *sys_; }
    Side side() const { return side_; }
    const CutoffParams& params() const { return params_; }
    double half_width() const { return half_width_; }
    Eigen::Index modes() const { return directions_.cols(); }
    const Mat& directions() const { return directions_; }
    const std::vector<int>& points() const { return points_; }
    Eigen::Index axes() const { return static_cast<Eigen::Index>(points_.size()); }
    Eigen::Index value_size() const;
    Eigen::Index sample_count() const { return values_.cols(); }

    /// Values, one column per sample.
    const Mat& values() const { return values_; }
    Mat& values() { return values_; }
    /// Optional first derivative per sample (value_size x axes).
    const std::vector<Mat>& jet() const { return jet_; }
    std::vector<Mat>& jet() { return jet_; }

    Vec sample_coords(Eigen::Index i) const;
    /// Multilinear interpolation; coordinates outside the box are clamped.
    Vec eval_coords(const Vec& x) const;
    Mat jet_coords(const Vec& x) const;

    /// Domain coordinates of a point. V is translated to the reference fibre
    /// and projected on the sampled directions; the discarded part's norm is
    /// written to `discarded`.
    Vec coords_of(const BundlePoint& W, double* discarded = nullptr) const;
    /// Domain coordinates of a tangent vector at base y.
    Vec tangent_coords(const Vec& y, const BundlePoint& dW) const;
    Vec eval(const BundlePoint& W, double* discarded = nullptr) const { return eval_coords(coords_of(W, discarded)); }
    /// The point at base y with the given domain coordinates and graph values filled in.
    BundlePoint point_at(const Vec& coords, const Vec& y) const;
    /// Writes graph values (from `value`) into the dependent block(s) of W.
    void close(BundlePoint& W, const Vec& value) const;
    /// The dependent block(s) of W.
    Vec dependent(const BundlePoint& W) const;

    /// sup |h| over samples.
    double sup() const;
    /// Largest sampled Lipschitz quotient between grid neighbours in the Q-weighted metric.
    double lipschitz() const;
    /// |h| at the sample with zero coordinates (0 when the origin is not a sample).
    double base_value() const;

private:
    const CutoffSystem* sys_;
    Side side_;
    CutoffParams params_;
    double half_width_;
    std::vector<int> points_;
    Mat directions_;
    Eigen::LLT<Mat> gram_;
    Mat values_;
    std::vector<Mat> jet_;

    double axis_node(Eigen::Index axis, int j) const;
    /// Weight of axis in the Q metric.
    double axis_weight(Eigen::Index axis) const;
};

/// Membership in the graph class: h(base) = 0, Lipschitz <= mu, sup <= delta / 15.
struct GammaCheck {
    double base = 0.0, lipschitz = 0.0, sup = 0.0;
    bool pass = false;
};
GammaCheck gamma_check(const GraphFn& h);

struct SolverConfig {
    /// Integration horizon; 0 selects 10 / (lambda - eta).
    double horizon = 0.0;
    IntegratorConfig integrator{0.02, Scheme::Lawson, 1.0, 1 << 30, 1e6};
    int max_iter = 40;
    double tol = 1e-12;
    /// Iterations ignored by the contraction monitor.
    int burn_in = 2;
    /// Surrogate constant in the tail bound.
    double C = 1.0;
    double resolved_horizon(double lambda, double eta) const;
};

struct LpResult {
    GraphFn graph;
    /// C delta^2 exp(-(lambda - eta) T) / (lambda - eta)
    double tail_bound = 0.0;
};

/// One application of the Lyapunov-Perron operator to every sample.
LpResult lp_apply(const GraphFn& h, const SolverConfig& cfg);
/// The operator evaluated at arbitrary domain coordinates.
Vec lp_value(const GraphFn& h, const Vec& coords, const SolverConfig& cfg);

struct FixedPointReport {
    int iterations = 0;
    std::vector<double> distances;
    std::vector<double> ratios;
    /// Geometric mean of the ratios after burn-in.
    double contraction = 0.0;
    double residual = 0.0;
    double tail_bound = 0.0;
    bool converged = false;
};

struct GraphSolution {
    GraphFn graph;
    FixedPointReport report;
};

/// Picard iteration from h = 0. Throws ContractionFailure when the ratio stays
/// at or above one for three consecutive iterations after burn-in.
GraphSolution solve_graph(const CutoffSystem& sys, Side side, const CutoffParams& params, Eigen::Index modes,
                          const std::vector<int>& points, const SolverConfig& cfg, double half_width = 0.0);

struct ResidualStats {
    double max = 0.0, mean = 0.0;
    int samples = 0;
};
/// Starts on the graph, flows for tau and measures |dependent(W(tau)) - h(W(tau))| / tau.
ResidualStats invariance_residual(const GraphFn& h, const std::vector<Eigen::Index>& samples, double tau,
                                  const IntegratorConfig& integrator);

/// Intersection of the cu and cs graphs. Each centre sample is solved by
/// alternating a_plus <- h_cs(., a_minus), a_minus <- h_cu(., a_plus).
struct CenterReport {
    int max_iterations = 0;
    double max_update = 0.0;
};
GraphFn center_graph(const GraphFn& h_cu, const GraphFn& h_cs, double tol = 1e-14, int max_iter = 200,
                     CenterReport* report = nullptr);
/// (a_plus, a_minus) at one centre coordinate after exactly `iterations` alternations.
Vec center_value(const GraphFn& h_cu, const GraphFn& h_cs, const Vec& center_coords, int iterations);

/// Fixed point of the first-variation operator; stores the jet in a copy of h.
struct JetReport {
    int iterations = 0;
    std::vector<double> distances;
    bool converged = false;
};
GraphFn jet1_solve(const GraphFn& h, const SolverConfig& cfg, JetReport* report = nullptr);

/// Binary container: "IMKG", u32 header length, JSON header, f64 values, optional f64 jet.
void save_graph(const std::string& path, const GraphFn& h);
GraphFn load_graph(const std::string& path, const CutoffSystem& sys);

}  // namespace imk
