#include "cli_common.hpp"

#include <CLI11.hpp>

#include <numbers>

using namespace imk;

int main(int argc, char** argv) {
    CLI::App app{"Newton-solve a traveling wave (dark soliton family) on a periodic box"};
    int dim = 1;
    double c = 0.5, tol = 1e-9, boundary_tol = 1e-6;
    std::vector<double> box{32.0};
    std::vector<int> n{256};
    std::string out;
    app.add_option("--dim", dim, "Spatial dimension (1 or 2)")->check(CLI::Range(1, 2));
    app.add_option("--c", c, "Speed along the first axis");
    app.add_option("--box", box, "Box length per axis (the first is snapped to a periodic length)");
    app.add_option("--n", n, "Lattice points per axis");
    app.add_option("--tol", tol, "Newton residual tolerance");
    app.add_option("--boundary-tol", boundary_tol, "Accepted deviation of |U| from 1 on the box faces");
    app.add_option("--out", out, "Output snapshot (metadata goes to <out>.json)")->required();
    CLI11_PARSE(app, argc, argv);

    return cli::guarded_main([&] {
        if (static_cast<int>(box.size()) < dim) box.resize(dim, box.back());
        if (static_cast<int>(n.size()) < dim) n.resize(dim, n.back());
        const auto [L, winding] = admissible_box_length(c, box[0]);
        if (std::abs(L - box[0]) > 1e-12)
            std::cout << "box length " << box[0] << " snapped to " << L << " (winding " << winding << ")\n";
        NewtonOptions opt;
        opt.tol = tol;
        opt.boundary_tol = boundary_tol;
        WaveProfile p = soliton_profile(Grid({n[0]}, {L}), c, opt);
        if (dim == 2) {
            const Grid g({n[0], n[1]}, {L, box[1]});
            Vec c2 = Vec::Zero(2);
            c2[0] = c;
            WaveProfile q;
            q.c = c2;
            q.U = extend_profile(p.U, g);
            q.residual = sup_abs(energy_momentum_gradient(q.U, c2));
            q.boundary_deviation = boundary_deviation(q.U);
            q.newton_iterations = p.newton_iterations;
            q.residual_history = p.residual_history;
            p = std::move(q);
        }
        save_wave_profile(out, p);
        std::cout << "residual " << p.residual << ", boundary deviation " << p.boundary_deviation << ", "
                  << p.newton_iterations << " Newton iterations\n";
        return 0;
    });
}
