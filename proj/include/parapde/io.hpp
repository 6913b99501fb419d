#pragma once

// Serialization: fields as little-endian raw f64 with a JSON sidecar
// {dim, N, L}, CSV export for d = 1, JSON manifests (printed deterministically
// so identical configs give byte-identical artifacts), and the enhancement
// bundle layout.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "parapde/enhancement.hpp"

namespace parapde {

using json = nlohmann::json;

namespace io_detail {

inline void write_bytes(const std::string& path, const void* data, std::size_t bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("io: cannot open for writing: " + path);
    out.write(static_cast<const char*>(data), std::streamsize(bytes));
}

}  // namespace io_detail

inline json grid_to_json(const Grid& g) {
    return json{{"dim", g.dim}, {"N", g.N}, {"L", g.L}};
}

inline Grid grid_from_json(const json& j) {
    return Grid(j.at("dim").get<int>(), j.at("N").get<int>(), j.at("L").get<double>());
}

// Raw little-endian doubles; this library targets little-endian hosts.
inline void write_field(const Field& f, const std::string& stem) {
    io_detail::write_bytes(stem + ".f64", f.values.data(), f.values.size() * sizeof(double));
    std::ofstream side(stem + ".json");
    side << grid_to_json(f.grid).dump(2) << "\n";
}

inline Field read_field(const std::string& stem) {
    std::ifstream side(stem + ".json");
    if (!side) throw std::runtime_error("io: missing sidecar: " + stem + ".json");
    json j;
    side >> j;
    Grid g = grid_from_json(j);
    Field f(g);
    std::ifstream in(stem + ".f64", std::ios::binary);
    if (!in) throw std::runtime_error("io: missing data: " + stem + ".f64");
    in.read(reinterpret_cast<char*>(f.values.data()),
            std::streamsize(f.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("io: short read: " + stem + ".f64");
    return f;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv_1d(const Field& f, const std::string& path) {
    if (f.grid.dim != 1) throw std::invalid_argument("write_csv_1d: d = 1 only");
    std::ofstream out(path);
    out << "x,value\n";
    for (int i = 0; i < f.grid.N; ++i)
        out << fmt17(f.grid.x(i)) << "," << fmt17(f.values[std::size_t(i)]) << "\n";
}

inline void write_csv_columns(const std::vector<std::string>& headers,
                              const std::vector<std::vector<double>>& cols,
                              const std::string& path) {
    std::ofstream out(path);
    for (std::size_t c = 0; c < headers.size(); ++c)
        out << headers[c] << (c + 1 < headers.size() ? "," : "\n");
    if (cols.empty()) return;
    for (std::size_t r = 0; r < cols[0].size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out << fmt17(cols[c][r]) << (c + 1 < cols.size() ? "," : "\n");
}

inline void write_manifest(const json& j, const std::string& path) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";  // sorted keys, deterministic
}

// Enhancement bundle: directory of field dumps plus a manifest.
inline void write_enhancement(const KPZEnhancement& enh, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto dump_stf = [&](const SpaceTimeField& f, const std::string& name) {
        // flat dump: all slices concatenated
        std::vector<double> flat;
        flat.reserve(std::size_t(f.num_slices()) * f.grid().size());
        for (const auto& s : f.slices) flat.insert(flat.end(), s.values.begin(), s.values.end());
        io_detail::write_bytes(dir + "/" + name + ".f64", flat.data(), flat.size() * sizeof(double));
    };
    dump_stf(enh.Y, "Y");
    dump_stf(enh.Y1, "Y1");
    dump_stf(enh.Y2, "Y2");
    dump_stf(enh.Y3, "Y3");
    dump_stf(enh.Y4, "Y4");
    dump_stf(enh.Yz, "Yz");
    json manifest{{"n", enh.n},
                  {"seed", enh.seed},
                  {"c1", enh.c1},
                  {"c4", enh.c4},
                  {"c1_oracle", enh.c1_oracle},
                  {"grid", grid_to_json(enh.grid)},
                  {"dt", enh.Y.dt()},
                  {"slices", enh.Y.num_slices()}};
    write_manifest(manifest, dir + "/manifest.json");
}

struct NormReportEntry {
    std::string flavor;
    double alpha, p, q, delta, value;
};

inline json norm_report_json(const NormReportEntry& e) {
    json j;
    j["flavor"] = e.flavor;
    j["alpha"] = e.alpha;
    j["p"] = e.p == kInf ? json("inf") : json(e.p);
    j["q"] = e.q == kInf ? json("inf") : json(e.q);
    j["delta"] = e.delta;
    j["value"] = e.value;
    return j;
}

}  // namespace parapde
