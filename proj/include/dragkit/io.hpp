#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/uuid/detail/sha1.hpp>

#include "pulse_shapes.hpp"

namespace dragkit::io {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// SHA-1 of the canonical (key-sorted) JSON dump.
inline std::string config_hash(const json& config) {
    const std::string s = config.dump();
    boost::uuids::detail::sha1 h;
    h.process_bytes(s.data(), s.size());
    boost::uuids::detail::sha1::digest_type d;
    h.get_digest(d);
    char buf[41];
    for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", d[i]);
    return std::string(buf, 40);
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    return f;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& p, const std::vector<std::string>& header, const std::string& hash)
        : out_(open_out(p)) {
        out_ << "# config_hash=" << hash << '\n';
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }
    CsvWriter& row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
        return *this;
    }
    CsvWriter& row(const std::vector<double>& cells) {
        std::vector<std::string> s;
        s.reserve(cells.size());
        for (double v : cells) s.push_back(num(v));
        return row(s);
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& p, json j, const std::string& hash) {
    j["config_hash"] = hash;
    open_out(p) << j.dump(2) << '\n';
}

inline void write_jsonl(const std::filesystem::path& p, const std::vector<json>& lines, const std::string& hash) {
    auto f = open_out(p);
    for (json j : lines) {
        j["config_hash"] = hash;
        f << j.dump() << '\n';
    }
}

inline json read_json(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw ConfigError("cannot read " + p.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

/// Samples u_x, u_y and delta of channel `control` on the schedule grid.
inline void write_schedule_csv(const std::filesystem::path& p, const ControlSchedule& s, const std::string& hash,
                               int control = 0) {
    CsvWriter w(p, {"t", "u_x", "u_y", "delta"}, hash);
    for (std::size_t i = 0; i <= s.grid.n_steps; ++i) {
        const double t = s.grid.t(i);
        const cplx f = s.field(control, t);
        w.row(std::vector<double>{t, f.real(), f.imag(), s.detuning(t)});
    }
}

}  // namespace dragkit::io
