#pragma once

// Persistence: field snapshots, CSV tables, JSON reports and the SHA-256
// manifest of an output directory.

#include "mkdv/error.hpp"
#include "mkdv/grid.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace mkdv::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256: digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + p.string());
    return ss.str();
}

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct SnapshotHeader {
    std::size_t n = 0;
    double L = 0.0;
    double t = 0.0;
    int sigma = 1;
};

inline std::string encode_snapshot(const Field& u, double t, Sign sigma) {
    json h;
    h["n"] = u.size();
    h["L"] = u.grid().half_width();
    h["t"] = t;
    h["sigma"] = sigma.value();
    h["byte_order"] = "little";
    h["dtype"] = "float64";
    std::string out = h.dump() + "\n";
    const std::size_t off = out.size();
    out.resize(off + 8 * u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        auto bits = std::bit_cast<std::uint64_t>(u[j]);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        std::memcpy(out.data() + off + 8 * j, &bits, 8);
    }
    return out;
}

/// Parses a snapshot; the grid is rebuilt from (L, n).
inline std::pair<SnapshotHeader, Field> decode_snapshot(std::string_view bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) throw IoError("snapshot: missing header line");
    json h;
    try {
        h = json::parse(bytes.substr(0, nl));
    } catch (const json::exception& e) {
        throw IoError(std::string("snapshot: bad header: ") + e.what());
    }
    SnapshotHeader sh;
    try {
        if (h.at("byte_order") != "little" || h.at("dtype") != "float64")
            throw IoError("snapshot: only little-endian float64 is supported");
        sh.n = h.at("n").get<std::size_t>();
        sh.L = h.at("L").get<double>();
        sh.t = h.at("t").get<double>();
        sh.sigma = h.at("sigma").get<int>();
    } catch (const json::exception& e) {
        throw IoError(std::string("snapshot: header field: ") + e.what());
    }
    const auto payload = bytes.substr(nl + 1);
    if (payload.size() != 8 * sh.n)
        throw IoError("snapshot: expected " + std::to_string(8 * sh.n) + " data bytes, found " +
                      std::to_string(payload.size()));
    std::vector<double> u(sh.n);
    for (std::size_t j = 0; j < sh.n; ++j) {
        std::uint64_t bits;
        std::memcpy(&bits, payload.data() + 8 * j, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        u[j] = std::bit_cast<double>(bits);
    }
    try {
        return {sh, Field(make_grid(sh.L, sh.n), std::move(u))};
    } catch (const DomainError& e) {
        throw IoError(std::string("snapshot: ") + e.what());
    }
}

/// Column-major CSV builder with a fixed header.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
        text_ += "\n";
    }

    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }
    void row(const std::vector<double>& values) {
        if (values.size() != cols_) throw DomainError("csv: row width does not match header");
        for (std::size_t i = 0; i < values.size(); ++i) text_ += (i ? "," : "") + fmt(values[i]);
        text_ += "\n";
    }

    const std::string& str() const noexcept { return text_; }

private:
    std::size_t cols_;
    std::string text_;
};

/// Writes files under one root and records their hashes; finish() emits
/// manifest.json. Writes go through a temporary file and a rename.
class OutputDir {
public:
    explicit OutputDir(fs::path root) : root_(std::move(root)) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) throw IoError("cannot create " + root_.string() + ": " + ec.message());
    }

    const fs::path& root() const noexcept { return root_; }

    void write(const std::string& rel, std::string_view bytes) {
        if (rel == "manifest.json") throw IoError("manifest.json is reserved");
        const fs::path p = root_ / rel;
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
        const fs::path tmp = p.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + tmp.string());
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out) throw IoError("write failed: " + tmp.string());
        }
        fs::rename(tmp, p, ec);
        if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
        files_[rel] = {sha256_hex(bytes), bytes.size()};
    }

    void write_json(const std::string& rel, const json& j) { write(rel, j.dump(2) + "\n"); }
    void write_csv(const std::string& rel, const Csv& c) { write(rel, c.str()); }
    void write_snapshot(const std::string& rel, const Field& u, double t, Sign sigma) {
        write(rel, encode_snapshot(u, t, sigma));
    }

    /// Lists a nested run's files (and its manifest) under `prefix`.
    void adopt_manifest(const std::string& prefix, const fs::path& child_root) {
        const std::string text = read_file(child_root / "manifest.json");
        json m;
        try {
            m = json::parse(text);
            for (const auto& f : m.at("files"))
                files_[prefix + "/" + f.at("path").get<std::string>()] = {f.at("sha256").get<std::string>(),
                                                                          f.at("bytes").get<std::size_t>()};
        } catch (const json::exception& e) {
            throw IoError("bad manifest in " + child_root.string() + ": " + e.what());
        }
        files_[prefix + "/manifest.json"] = {sha256_hex(text), text.size()};
    }

    std::string manifest_text() const {
        json files = json::array();
        for (const auto& [k, v] : files_) files.push_back({{"path", k}, {"sha256", v.first}, {"bytes", v.second}});
        json m;
        m["files"] = files;
        return m.dump(2) + "\n";
    }

    void finish() {
        const std::string text = manifest_text();
        const fs::path p = root_ / "manifest.json";
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + p.string());
        out << text;
        if (!out) throw IoError("write failed: " + p.string());
    }

    const std::map<std::string, std::pair<std::string, std::size_t>>& files() const noexcept { return files_; }

private:
    fs::path root_;
    std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

/// Recomputes every hash listed in a manifest; returns the mismatching paths.
inline std::vector<std::string> verify_manifest(const fs::path& root) {
    const json m = json::parse(read_file(root / "manifest.json"));
    std::vector<std::string> bad;
    for (const auto& f : m.at("files")) {
        const auto rel = f.at("path").get<std::string>();
        std::string got;
        try {
            got = sha256_hex(read_file(root / rel));
        } catch (const IoError&) {
            bad.push_back(rel);
            continue;
        }
        if (got != f.at("sha256").get<std::string>()) bad.push_back(rel);
    }
    return bad;
}

}  // namespace mkdv::io
