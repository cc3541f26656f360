#include "imk/snapshot.hpp"

#include "imk/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace imk {

namespace {

template <typename T>
void put(std::ostream& os, T value) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    std::array<char, sizeof(T)> bytes;
    if (!is.read(bytes.data(), sizeof(T))) throw std::runtime_error("truncated field snapshot");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void write_snapshot(std::ostream& os, const Field& f) {
    os.write("IMKF", 4);
    put<std::uint32_t>(os, kSnapshotVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.spatial_dim()));
    for (int d : f.grid.dims) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (double l : f.grid.lengths) put<double>(os, l);
    for (Eigen::Index i = 0; i < f.re.size(); ++i) put<double>(os, f.re[i]);
    for (Eigen::Index i = 0; i < f.im.size(); ++i) put<double>(os, f.im[i]);
}

Field read_snapshot(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "IMKF", 4) != 0)
        throw std::runtime_error("not a field snapshot (bad magic)");
    const auto version = get<std::uint32_t>(is);
    if (version != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version");
    const auto dim = get<std::uint32_t>(is);
    if (dim < 1 || dim > 3) throw ShapeError("snapshot has invalid spatial dimension");
    std::vector<int> dims(dim);
    std::vector<double> lengths(dim);
    for (auto& d : dims) d = static_cast<int>(get<std::uint32_t>(is));
    for (auto& l : lengths) l = get<double>(is);
    Grid g(dims, lengths);
    Field f(g);
    for (Eigen::Index i = 0; i < f.re.size(); ++i) f.re[i] = get<double>(is);
    for (Eigen::Index i = 0; i < f.im.size(); ++i) f.im[i] = get<double>(is);
    return f;
}

void save_snapshot(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_snapshot(os, f);
}

Field load_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_snapshot(is);
}

}  // namespace imk
