#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "kinetik/csv.hpp"
#include "kinetik/fields.hpp"

namespace kinetik {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw ValidationError("truncated KFLD stream");
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated KFLD stream");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

}  // namespace

void write_kfld(const DensityField& f, std::ostream& os) {
    os.write("KFLD", 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(f.grid().d));
    put_u32(os, static_cast<std::uint32_t>(f.grid().n));
    put_f64(os, f.grid().half_width);
    put_f64(os, f.tail().C);
    put_f64(os, f.tail().q);
    for (double x : f.values()) put_f64(os, x);
}

void write_kfld(const DensityField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    write_kfld(f, os);
}

DensityField read_kfld(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "KFLD", 4) != 0) throw ValidationError("not a KFLD field file");
    std::uint32_t version = get_u32(is);
    require(version == kVersion, "unsupported KFLD version " + std::to_string(version));
    Grid g;
    g.d = static_cast<int>(get_u32(is));
    g.n = static_cast<int>(get_u32(is));
    g.half_width = get_f64(is);
    g.validate();
    TailModel t;
    t.C = get_f64(is);
    t.q = get_f64(is);
    std::vector<double> vals(g.size());
    for (double& x : vals) x = get_f64(is);
    return DensityField(g, std::move(vals), t);
}

DensityField read_kfld(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open field file " + path);
    return read_kfld(is);
}

void write_field_csv(const DensityField& f, const std::string& path) {
    const int d = f.grid().d;
    std::vector<std::string> header;
    for (int k = 0; k < d; ++k) header.push_back("v" + std::to_string(k + 1));
    header.push_back("value");
    CsvWriter w(path, header);
    for (std::size_t p = 0; p < f.grid().size(); ++p) {
        Vec v = f.grid().point(p);
        for (int k = 0; k < d; ++k) w << v[k];
        w << f.value_at(p);
        w.end_row();
    }
}

}  // namespace kinetik
