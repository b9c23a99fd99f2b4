#pragma once

#include <json.hpp>

#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/io/json_convert.hpp"
#include "qpump/soliton/newton.hpp"

namespace qpump {

// Layout: 8-byte magic, uint64 header length, JSON header, n complex doubles
// (real, imag interleaved), all little-endian.
inline constexpr char kSolitonMagic[8] = {'Q', 'P', 'S', 'O', 'L', '0', '0', '1'};

inline void save_field(const std::filesystem::path& path, const ComplexField& f, nlohmann::json header) {
    header["grid"] = to_json(f.grid);
    header["format"] = "complex128-le";
    const std::string h = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_field: cannot open " + path.string());
    out.write(kSolitonMagic, sizeof kSolitonMagic);
    const std::uint64_t len = h.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(std::complex<double>)));
    if (!out) throw std::runtime_error("save_field: write failed for " + path.string());
}

struct LoadedField {
    ComplexField field;
    nlohmann::json header;
};

inline LoadedField load_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_field: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kSolitonMagic, sizeof magic) != 0) {
        throw std::runtime_error("load_field: " + path.string() + " is not a field file");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || len > (1u << 24)) throw std::runtime_error("load_field: corrupt header length");
    std::string h(len, '\0');
    in.read(h.data(), static_cast<std::streamsize>(len));
    LoadedField out;
    out.header = nlohmann::json::parse(h);
    const Grid g = grid_from_json(out.header.at("grid"));
    std::vector<Complex> v(g.size());
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(Complex)));
    if (!in) throw std::runtime_error("load_field: truncated data in " + path.string());
    out.field = ComplexField(g, std::move(v));
    return out;
}

inline void save_solution(const std::filesystem::path& path, const SolitonSolution& s) {
    nlohmann::json h;
    h["kind"] = "soliton";
    h["mu"] = s.mu;
    h["norm_N"] = s.norm_N;
    h["residual"] = s.residual;
    h["iterations"] = s.iterations;
    h["phi"] = s.phi;
    h["spec"] = to_json(s.spec);
    save_field(path, s.psi, std::move(h));
}

inline SolitonSolution load_solution(const std::filesystem::path& path) {
    auto lf = load_field(path);
    SolitonSolution s;
    s.psi = std::move(lf.field);
    s.mu = lf.header.at("mu").get<double>();
    s.norm_N = lf.header.at("norm_N").get<double>();
    s.residual = lf.header.at("residual").get<double>();
    s.iterations = lf.header.value("iterations", 0);
    s.phi = lf.header.value("phi", 0.0);
    s.spec = spec_from_json(lf.header.at("spec"));
    return s;
}

/// Sup-norm residual of the stationary equation for a stored solution.
inline double recompute_residual(const SolitonSolution& s) {
    const auto p = stationary_problem(s.spec, s.phi, s.psi.grid);
    const detail::KineticOperator kin(p.grid);
    return stationary_residual(kin, p, s.mu, real_part(s.psi)).cwiseAbs().maxCoeff();
}

}  // namespace qpump
