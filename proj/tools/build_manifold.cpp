#include "cli_common.hpp"
#include "imk/manifold.hpp"

#include <CLI11.hpp>

using namespace imk;

int main(int argc, char** argv) {
    CLI::App app{"Lyapunov-Perron construction of the cu, cs or centre graph"};
    std::string side_s = "cu", system = "gp", profile, dec, out, cu_path, cs_path;
    double lambda = 1.0, omega = 2.0, kappa = 1.0;
    CutoffParams params{1e-2, 0.1, 4.0, 0.0};
    int samples = 9, modes = 2;
    std::string scheme = "lawson";
    bool jet = false;
    SolverConfig cfg;
    app.add_option("--side", side_s, "cu, cs or c")->check(CLI::IsMember({"cu", "cs", "c"}));
    app.add_option("--system", system, "gp or toy-quadratic, toy-coupled, toy-hamiltonian");
    app.add_option("--profile", profile, "Wave profile (gp)");
    app.add_option("--dec", dec, "dec.json written by decompose (gp)");
    app.add_option("--lambda", lambda, "Toy spectral gap");
    app.add_option("--omega", omega, "Toy fibre frequency");
    app.add_option("--kappa", kappa, "Toy coupling");
    app.add_option("--delta", params.delta, "Cut-off radius");
    app.add_option("--mu", params.mu, "Lipschitz bound of the graph class");
    app.add_option("--Q", params.Q, "Anisotropy");
    app.add_option("--eta", params.eta, "Decay margin (0: min(1/2, lambda/4))");
    app.add_option("--samples", samples, "Grid points per domain axis");
    app.add_option("--modes", modes, "Fibre modes spanning the sampled fibre slice");
    app.add_option("--dt", cfg.integrator.dt, "Step of the backward integrations");
    app.add_option("--scheme", scheme, "lawson or rk4");
    app.add_option("--horizon", cfg.horizon, "Backward horizon (0: 10/(lambda - eta))");
    app.add_option("--tol", cfg.tol, "Fixed-point tolerance");
    app.add_option("--max-iter", cfg.max_iter, "Fixed-point iteration cap");
    app.add_flag("--jet", jet, "Also solve for the first-order jet");
    app.add_option("--cu", cu_path, "Existing cu graph (side c)");
    app.add_option("--cs", cs_path, "Existing cs graph (side c)");
    app.add_option("--out", out, "Output graph container")->required();
    CLI11_PARSE(app, argc, argv);

    return cli::guarded_main([&] {
        cfg.integrator.scheme = parse_scheme(scheme);
        std::unique_ptr<CutoffSystem> owned;
        cli::LatticeModel model;
        const CutoffSystem* sys = nullptr;
        if (system == "gp") {
            if (profile.empty()) throw ParameterError("--profile is required for the lattice model");
            model = cli::load_model(profile, dec);
            sys = model.bundle.get();
        } else {
            owned = cli::toy_system(system, lambda, omega, kappa);
            sys = owned.get();
        }
        if (params.eta == 0.0) params.eta = CutoffParams::defaults(sys->lambda()).eta;
        params.validate(sys->lambda());
        const ParameterGate gate = check_parameter_gates(params, sys->lambda(), sys->dims().d1);
        if (!gate.all()) std::cout << "warning: smallness gates fail with C = 1:\n" << gate.describe() << '\n';

        auto solve = [&](Side s) {
            const GraphFn shape = GraphFn::uniform(*sys, s, params, modes, samples);
            GraphSolution sol = solve_graph(*sys, s, params, modes, shape.points(), cfg);
            std::cout << side_name(s) << ": " << sol.report.iterations << " iterations, contraction "
                      << sol.report.contraction << ", residual " << sol.report.residual << '\n';
            return sol.graph;
        };
        GraphFn h = [&] {
            const Side side = parse_side(side_s);
            if (side != Side::Center) return solve(side);
            const GraphFn cu = cu_path.empty() ? solve(Side::Cu) : load_graph(cu_path, *sys);
            const GraphFn cs = cs_path.empty() ? solve(Side::Cs) : load_graph(cs_path, *sys);
            return center_graph(cu, cs);
        }();
        if (jet && h.side() != Side::Center) {
            JetReport jr;
            h = jet1_solve(h, cfg, &jr);
            std::cout << "jet: " << jr.iterations << " iterations\n";
        }
        const GammaCheck g = gamma_check(h);
        std::cout << "graph class: base " << g.base << ", Lipschitz " << g.lipschitz << ", sup " << g.sup
                  << (g.pass ? " (member)" : " (not a member)") << '\n';
        save_graph(out, h);
        return 0;
    });
}
