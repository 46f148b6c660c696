#ifndef SKELMAX_FIELD_IO_HPP
#define SKELMAX_FIELD_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"

namespace skelmax {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; byte swapping is not implemented");

// One JSON header line, then raw IEEE-754 binary64 little-endian values,
// row-major with the last axis fastest. Round-trips bit-exactly.
inline void writeField(const ScalarField& field, const std::string& path) {
    field.validate();
    nlohmann::json hdr;
    hdr["n"] = field.spec.n;
    hdr["delta"] = field.spec.delta;
    hdr["origin"] = nlohmann::json::array();
    hdr["extent"] = nlohmann::json::array();
    for (int i = 0; i < field.spec.n; ++i) {
        hdr["origin"].push_back(field.spec.origin[i]);
        hdr["extent"].push_back(field.spec.extent[i]);
    }
    hdr["dtype"] = "f64";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot open for writing: " + path);
    out << hdr.dump() << '\n';
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (!out) throw Error("io-error", "short write: " + path);
}

inline ScalarField readField(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("io-error", "missing header: " + path);
    nlohmann::json hdr = nlohmann::json::parse(line, nullptr, false);
    if (hdr.is_discarded()) throw Error("io-error", "malformed header: " + path);
    if (hdr.value("dtype", "") != "f64") throw Error("io-error", "unsupported dtype");

    ScalarField f;
    f.spec.n = hdr.at("n").get<int>();
    f.spec.delta = hdr.at("delta").get<double>();
    if (f.spec.n < 1 || f.spec.n > kMaxDim) throw Error("io-error", "bad dimension in header");
    for (int i = 0; i < f.spec.n; ++i) {
        f.spec.origin[i] = hdr.at("origin").at(static_cast<std::size_t>(i)).get<double>();
        f.spec.extent[i] = hdr.at("extent").at(static_cast<std::size_t>(i)).get<std::int64_t>();
    }
    f.spec.validate();
    f.values.resize(static_cast<std::size_t>(f.spec.cellCount()));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(f.values.size() * sizeof(double)))
        throw Error("io-error", "truncated payload: " + path);
    return f;
}

} // namespace skelmax

#endif
