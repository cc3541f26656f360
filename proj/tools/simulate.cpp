#include "cli_common.hpp"
#include "imk/propagator.hpp"

#include <CLI11.hpp>

using namespace imk;

namespace {

Vec read_vec(const nlohmann::json& j, const char* key, Eigen::Index size) {
    Vec v = Vec::Zero(size);
    if (!j.contains(key)) return v;
    const auto x = j.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(x.size()) != size)
        throw ShapeError(std::string(key) + " needs " + std::to_string(size) + " entries");
    for (Eigen::Index i = 0; i < size; ++i) v[i] = x[i];
    return v;
}

/// {"y", "a_d1", "a_d2", "a_plus", "a_minus", "fibre_modes"}; missing blocks are zero.
/// fibre_modes are coefficients along the lowest fibre modes.
BundlePoint read_initial(const GpBundle& b, const std::string& path) {
    const BlockDims d = b.dims();
    BundlePoint W = BundlePoint::zero(d);
    if (path.empty()) return W;
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    const nlohmann::json j = nlohmann::json::parse(is);
    W.y = read_vec(j, "y", d.k);
    W.a_d1 = read_vec(j, "a_d1", d.d1);
    W.a_d2 = read_vec(j, "a_d2", d.d2);
    W.a_plus = read_vec(j, "a_plus", d.d);
    W.a_minus = read_vec(j, "a_minus", d.d);
    if (j.contains("fibre_modes")) {
        const auto xi = j.at("fibre_modes").get<std::vector<double>>();
        const Mat dirs = b.fibre_directions(static_cast<Eigen::Index>(xi.size()));
        W.V = b.from_reference(W.y, dirs * Eigen::Map<const Vec>(xi.data(), dirs.cols()));
    }
    return W;
}

void header(std::ostream& os, const BlockDims& d) {
    os << "t";
    for (int i = 0; i < d.k; ++i) os << ",y" << i;
    for (int i = 0; i < d.d1; ++i) os << ",a_d1_" << i;
    for (int i = 0; i < d.d2; ++i) os << ",a_d2_" << i;
    for (int i = 0; i < d.d; ++i) os << ",a_plus_" << i;
    for (int i = 0; i < d.d; ++i) os << ",a_minus_" << i;
    os << ",V_norm,transverse_size,energy\n";
}

void row(std::ostream& os, const GpBundle& b, double t, const BundlePoint& W, double energy) {
    os << t;
    for (const Vec* v : {&W.y, &W.a_d1, &W.a_d2, &W.a_plus, &W.a_minus})
        for (double x : *v) os << ',' << x;
    const double vn = b.fibre_norm(W.V);
    os << ',' << vn << ',' << transverse_size(W, vn) << ',' << energy << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrate the reduced, cut-off or direct traveling-frame dynamics near a wave"};
    std::string mode = "reduced", profile, dec, init, out;
    IntegratorConfig ic{1e-3, Scheme::Lawson, 1.0, 10, 1e6};
    std::string scheme = "lawson";
    CutoffParams params;
    app.add_option("--mode", mode, "reduced, cutoff or direct")->check(CLI::IsMember({"reduced", "cutoff", "direct"}));
    app.add_option("--profile", profile, "Wave profile written by solve-wave")->required();
    app.add_option("--dec", dec, "dec.json written by decompose (supplies the tolerance)");
    app.add_option("--init", init, "Initial bundle coordinates (JSON)");
    app.add_option("--dt", ic.dt, "Time step");
    app.add_option("--T", ic.horizon, "Final time");
    app.add_option("--record-every", ic.record_every, "Write every n-th step");
    app.add_option("--scheme", scheme, "lawson or rk4");
    app.add_option("--delta", params.delta, "Cut-off radius (cutoff mode)");
    app.add_option("--eta", params.eta, "Decay margin (cutoff mode)");
    app.add_option("--out", out, "Trajectory CSV")->required();
    CLI11_PARSE(app, argc, argv);

    return cli::guarded_main([&] {
        ic.scheme = parse_scheme(scheme);
        const cli::LatticeModel m = cli::load_model(profile, dec);
        const GpBundle& b = *m.bundle;
        const BundlePoint W0 = read_initial(b, init);
        std::ofstream os(out);
        if (!os) throw std::runtime_error("cannot write " + out);
        os.precision(15);
        header(os, b.dims());
        if (mode == "direct") {
            const GpDirectFlow flow(b.grid(), m.profile.c);
            std::vector<double> times;
            const std::vector<Field> us = flow.evolve(b.chart(W0), ic, &times);
            Vec y = W0.y;
            for (std::size_t i = 0; i < us.size(); ++i) {
                const BundlePoint W = b.chart_inverse(us[i], y);
                y = W.y;
                row(os, b, times[i], W, energy_momentum(us[i], m.profile.c));
            }
            return 0;
        }
        const ReducedTrajectory tr = integrate_reduced(b, W0, ic, parse_reduced_mode(mode), params);
        for (std::size_t i = 0; i < tr.points.size(); ++i)
            row(os, b, tr.t[i], tr.points[i], i < tr.energy.size() ? tr.energy[i] : b.energy_of(tr.points[i]));
        return 0;
    });
}
