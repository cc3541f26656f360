#pragma once

#include "imk/bundle.hpp"
#include "imk/errors.hpp"
#include "imk/gp_model.hpp"
#include "imk/phase_space.hpp"
#include "imk/synthetic.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace imk::cli {

/// Lattice model rebuilt from a saved profile. The decomposition is recomputed
/// with the tolerance recorded in dec.json (or the default when none is given).
struct LatticeModel {
    WaveProfile profile;
    std::shared_ptr<const Decomposition> dec;
    std::shared_ptr<GpBundle> bundle;
};

inline double decomposition_tol(const std::string& dec_json) {
    if (dec_json.empty()) return DecomposeOptions{}.tol;
    std::ifstream is(dec_json);
    if (!is) throw std::runtime_error("cannot read " + dec_json);
    return nlohmann::json::parse(is).value("tol", DecomposeOptions{}.tol);
}

inline LatticeModel load_model(const std::string& profile_path, const std::string& dec_json) {
    LatticeModel m;
    m.profile = load_wave_profile(profile_path);
    DecomposeOptions opt;
    opt.tol = decomposition_tol(dec_json);
    auto space = std::make_shared<PhaseSpace>(gp_phase_space(m.profile));
    m.dec = std::make_shared<Decomposition>(decompose(space, opt));
    m.bundle = std::make_shared<GpBundle>(m.dec, m.profile);
    return m;
}

inline std::unique_ptr<ToySystem> toy_system(const std::string& kind, double lambda, double omega, double kappa) {
    if (kind == "toy-quadratic") return std::make_unique<ToySystem>(ToySystem::quadratic(lambda));
    if (kind == "toy-coupled") return std::make_unique<ToySystem>(ToySystem::coupled(lambda, omega, kappa));
    if (kind == "toy-hamiltonian") return std::make_unique<ToySystem>(ToySystem::hamiltonian(lambda, omega, kappa));
    throw ParameterError("unknown system kind: " + kind);
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(2) << '\n';
}

/// Runs a tool body, printing library errors instead of aborting.
template <class F>
int guarded_main(F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace imk::cli
