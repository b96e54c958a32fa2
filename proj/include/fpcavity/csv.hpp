#pragma once

// CSV codecs for the thermal and ring-down datasets.  Writers emit
// canonical order and shortest round-trip number formatting, so
// write(read(x)) is byte-identical for files produced by this module.
// Loaders report malformed rows with their line number.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fpcavity/errors.hpp"
#include "fpcavity/loss_budget.hpp"
#include "fpcavity/ringdown.hpp"

namespace fpcavity {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ParseError(where + ": invalid number '" + std::string(text) + "'");
    }
    return value;
}

inline long parse_integer(std::string_view text, const std::string& where) {
    long value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) {
        throw ParseError(where + ": invalid integer '" + std::string(text) + "'");
    }
    return value;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

/// FNV-1a 64-bit content digest, hex encoded; identifies report inputs.
inline std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[hash & 0xf];
        hash >>= 4;
    }
    return std::string(buf, 16);
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace detail

inline constexpr const char* kThermalCsvHeader = "temperature_k,tc_s,tc_err_s";
inline constexpr const char* kRingdownCsvHeader = "time_s,attenuation_db,detected,total";

inline std::string thermal_to_csv(const ThermalDataset& data) {
    const ThermalDataset canon = canonicalize(data);
    std::string out = std::string(kThermalCsvHeader) + "\n";
    for (const ThermalPoint& pt : canon.points) {
        out += format_double(pt.temperature_k);
        out += ',';
        out += format_double(pt.tc_s);
        if (pt.has_error()) {
            out += ',';
            out += format_double(pt.tc_err_s);
        }
        out += '\n';
    }
    return out;
}

/// Parses `temperature_k,tc_s[,tc_err_s]`; the error column may be missing
/// or empty per row.
inline ThermalDataset thermal_from_csv(const std::string& text,
                                       const std::string& source = "<thermal csv>") {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    ThermalDataset data;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line_no == 1) {
            const auto fields = detail::split_fields(line);
            if (fields.size() < 2 || fields[0] != "temperature_k" || fields[1] != "tc_s") {
                throw ParseError(where + ": expected header '" +
                                 kThermalCsvHeader + "'");
            }
            continue;
        }
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() < 2 || fields.size() > 3) {
            throw ParseError(where + ": expected 2 or 3 fields, got " +
                             std::to_string(fields.size()));
        }
        ThermalPoint pt;
        pt.temperature_k = parse_double(fields[0], where);
        pt.tc_s = parse_double(fields[1], where);
        if (fields.size() == 3 && !fields[2].empty()) {
            pt.tc_err_s = parse_double(fields[2], where);
        }
        data.points.push_back(pt);
    }
    try {
        return canonicalize(data);
    } catch (const Error& err) {
        throw ParseError(source + ": " + err.what());
    }
}

inline std::string ringdown_to_csv(const RingdownDataset& data) {
    const RingdownDataset canon = canonicalize(data);
    std::string out = std::string(kRingdownCsvHeader) + "\n";
    for (const RingdownCurve& curve : canon.curves) {
        for (const RingdownPoint& pt : curve.points) {
            out += format_double(pt.time_s);
            out += ',';
            out += format_double(curve.attenuation_db);
            out += ',';
            out += std::to_string(pt.detected);
            out += ',';
            out += std::to_string(pt.total);
            out += '\n';
        }
    }
    return out;
}

/// Parses `time_s,attenuation_db,detected,total`; rows may appear in any
/// order, grouping by attenuation happens here.
inline RingdownDataset ringdown_from_csv(const std::string& text,
                                         const std::string& source = "<ringdown csv>") {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    RingdownDataset data;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        if (line_no == 1) {
            if (detail::split_fields(line) != detail::split_fields(kRingdownCsvHeader)) {
                throw ParseError(where + ": expected header '" +
                                 kRingdownCsvHeader + "'");
            }
            continue;
        }
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 4) {
            throw ParseError(where + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        }
        RingdownPoint pt;
        pt.time_s = parse_double(fields[0], where);
        const double attenuation = parse_double(fields[1], where);
        const long detected = parse_integer(fields[2], where);
        const long total = parse_integer(fields[3], where);
        if (detected < 0 || total <= 0 || detected > total) {
            throw ParseError(where + ": need 0 <= detected <= total, total > 0");
        }
        pt.detected = static_cast<int>(detected);
        pt.total = static_cast<int>(total);

        RingdownCurve* curve = nullptr;
        for (RingdownCurve& existing : data.curves) {
            if (existing.attenuation_db == attenuation) {
                curve = &existing;
                break;
            }
        }
        if (curve == nullptr) {
            data.curves.push_back(RingdownCurve{attenuation, {}});
            curve = &data.curves.back();
        }
        curve->points.push_back(pt);
    }
    try {
        return canonicalize(data);
    } catch (const Error& err) {
        throw ParseError(source + ": " + err.what());
    }
}

}  // namespace fpcavity
