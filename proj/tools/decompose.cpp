#include "cli_common.hpp"
#include "imk/snapshot.hpp"

#include <CLI11.hpp>

#include <filesystem>

using namespace imk;

namespace {

nlohmann::json matrix_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[j] = m(i, j);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential trichotomy of the linearisation at a saved traveling wave"};
    std::string profile, out;
    DecomposeOptions opt;
    app.add_option("--profile", profile, "Wave profile written by solve-wave")->required();
    app.add_option("--tol", opt.tol, "Relative spectral threshold");
    app.add_option("--out", out, "Output JSON; bases go to <stem>_basis/")->required();
    CLI11_PARSE(app, argc, argv);

    return cli::guarded_main([&] {
        const WaveProfile p = load_wave_profile(profile);
        auto space = std::make_shared<PhaseSpace>(gp_phase_space(p));
        const Decomposition dec = decompose(space, opt);

        nlohmann::json j;
        j["profile"] = profile;
        j["tol"] = opt.tol;
        j["dimensions"] = {{"d", dec.d},
                           {"d1", dec.d1},
                           {"d2", dec.d2},
                           {"dim_ker", dec.dim_ker},
                           {"n_minus", dec.n_minus},
                           {"translations", dec.translations},
                           {"fibre_codimension", dec.finite_size()}};
        j["lambda"] = dec.lambda;
        j["norm_JL"] = dec.norm_JL;
        j["index_consistent"] = dec.index_consistent;
        j["center_pseudo_abscissa"] = dec.center_pseudo_abscissa;
        nlohmann::json spec = nlohmann::json::array();
        for (const SpectrumEntry& e : dec.spectrum)
            spec.push_back({{"re", e.value.real()},
                            {"im", e.value.imag()},
                            {"kind", e.kind},
                            {"krein", e.krein},
                            {"condition", e.condition}});
        j["spectrum"] = spec;
        nlohmann::json blocks = nlohmann::json::object();
        for (int b = 0; b < kFiniteBlocks; ++b) {
            const Block blk = static_cast<Block>(b);
            if (dec.size(blk) > 0) blocks[block_name(blk)] = matrix_json(dec.M(blk, blk));
        }
        j["blocks"] = blocks;
        j["M_full"] = matrix_json(dec.M_full);

        const std::filesystem::path dir = std::filesystem::path(out).replace_extension("").string() + "_basis";
        std::filesystem::create_directories(dir);
        nlohmann::json files = nlohmann::json::array();
        for (int b = 0; b < kFiniteBlocks; ++b) {
            const Block blk = static_cast<Block>(b);
            const Mat V = dec.basis(blk), Z = dec.duals(blk);
            for (Eigen::Index i = 0; i < V.cols(); ++i) {
                const std::string stem = std::string(block_name(blk)) + "_" + std::to_string(i);
                const auto vp = dir / (stem + "_basis.imkf"), zp = dir / (stem + "_dual.imkf");
                save_snapshot(vp.string(), unstack(p.U.grid, V.col(i)));
                save_snapshot(zp.string(), unstack(p.U.grid, Z.col(i)));
                files.push_back({{"block", block_name(blk)}, {"index", i}, {"basis", vp.string()}, {"dual", zp.string()}});
            }
        }
        j["bases"] = files;
        cli::write_json(out, j);
        std::cout << "d = " << dec.d << ", d1 = " << dec.d1 << ", d2 = " << dec.d2 << ", ker = " << dec.dim_ker
                  << ", n- = " << dec.n_minus << ", lambda = " << dec.lambda << '\n';
        return 0;
    });
}
