#pragma once

/// @file container.hpp
/// @brief Minimal self-describing binary container used for every snapshot
/// and profile file.
///
/// Layout (all integers little-endian):
///   bytes 0..7   magic "RWAVEC01"
///   bytes 8..15  uint64 header length H
///   next H bytes UTF-8 JSON header: {"kind": ..., "version": 1, "meta": {...},
///                "arrays": [{"name", "dtype": "f64"|"c128", "shape": [...],
///                            "offset": <bytes into payload>}]}
///   payload      raw little-endian IEEE-754 doubles; complex values are
///                stored as interleaved (re, im) pairs, arrays row-major.

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwave/errors.hpp"

namespace rwave {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

class Container {
 public:
  static constexpr char kMagic[9] = "RWAVEC01";
  static constexpr int kVersion = 1;

  std::string kind;
  nlohmann::json meta = nlohmann::json::object();

  struct Array {
    std::string dtype;  // "f64" or "c128"
    std::vector<std::int64_t> shape;
    std::vector<double> data;  // complex stored interleaved
  };
  std::map<std::string, Array> arrays;

  void put_real(const std::string& name, std::vector<std::int64_t> shape,
                const double* p, std::size_t n) {
    arrays[name] = Array{"f64", std::move(shape), std::vector<double>(p, p + n)};
  }
  void put_complex(const std::string& name, std::vector<std::int64_t> shape,
                   const std::complex<double>* p, std::size_t n) {
    Array a{"c128", std::move(shape), std::vector<double>(2 * n)};
    std::memcpy(a.data.data(), p, 2 * n * sizeof(double));
    arrays[name] = std::move(a);
  }
  const Array& get(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw ConfigError("container: missing array '" + name + "'");
    return it->second;
  }
  std::vector<std::complex<double>> get_complex(const std::string& name) const {
    const Array& a = get(name);
    if (a.dtype != "c128") throw ConfigError("container: array '" + name + "' is not complex");
    std::vector<std::complex<double>> out(a.data.size() / 2);
    std::memcpy(static_cast<void*>(out.data()), a.data.data(), a.data.size() * sizeof(double));
    return out;
  }

  void write(const std::string& path) const {
    nlohmann::json h;
    h["kind"] = kind;
    h["version"] = kVersion;
    h["meta"] = meta;
    h["arrays"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, a] : arrays) {
      h["arrays"].push_back({{"name", name}, {"dtype", a.dtype}, {"shape", a.shape},
                             {"offset", offset}});
      offset += a.data.size() * sizeof(double);
    }
    const std::string hs = h.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("container: cannot open '" + path + "' for writing");
    out.write(kMagic, 8);
    const std::uint64_t len = hs.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(hs.data(), std::streamsize(hs.size()));
    for (const auto& [name, a] : arrays) {
      out.write(reinterpret_cast<const char*>(a.data.data()),
                std::streamsize(a.data.size() * sizeof(double)));
    }
  }

  static Container read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("container: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
      throw ConfigError("container: bad magic in '" + path + "'");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string hs(len, '\0');
    in.read(hs.data(), std::streamsize(len));
    const auto h = nlohmann::json::parse(hs);
    if (h.at("version").get<int>() != kVersion) {
      throw ConfigError("container: unsupported version");
    }
    Container c;
    c.kind = h.at("kind").get<std::string>();
    c.meta = h.at("meta");
    for (const auto& e : h.at("arrays")) {
      Array a;
      a.dtype = e.at("dtype").get<std::string>();
      a.shape = e.at("shape").get<std::vector<std::int64_t>>();
      std::int64_t n = 1;
      for (auto s : a.shape) n *= s;
      if (a.dtype == "c128") n *= 2;
      a.data.resize(std::size_t(n));
      in.read(reinterpret_cast<char*>(a.data.data()), std::streamsize(n * sizeof(double)));
      if (!in) throw ConfigError("container: truncated payload in '" + path + "'");
      c.arrays[e.at("name").get<std::string>()] = std::move(a);
    }
    return c;
  }
};

}  // namespace rwave
