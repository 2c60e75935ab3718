// csv.hpp — the shared results schema, value formatting, and atomic file
// writes.
//
// Doubles are rendered with std::to_chars in shortest round-trip form, so
// write → parse → write is byte-stable and the determinism checks can
// compare whole files.  Files are written to "<path>.tmp" and renamed into
// place; an interrupted run never leaves a partial file at the final path.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "klist/quantizer.hpp"

namespace klist {

[[nodiscard]] inline std::string format_double(double v) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, result.ptr);
}

[[nodiscard]] inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

struct ResultRow {
    std::string estimator; ///< "d1" | "d2"
    std::size_t d = 0;
    double sigma_x = 0.0;
    double sigma_n = 0.0;
    std::uint64_t k = 0;
    std::uint64_t trials = 0;
    double mean = 0.0;
    double std_err = 0.0;
    std::optional<double> theory_value; ///< empty when the bound is inadmissible
    std::string theory_kind;
    std::uint64_t seed_root = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr std::string_view result_csv_header =
    "estimator,d,sigma_x,sigma_n,k,trials,mean,stderr,theory_value,theory_kind,seed_root";

[[nodiscard]] inline std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out{result_csv_header};
    out.push_back('\n');
    for (const ResultRow& r : rows) {
        out += r.estimator;
        out += ',' + std::to_string(r.d);
        out += ',' + format_double(r.sigma_x);
        out += ',' + format_double(r.sigma_n);
        out += ',' + std::to_string(r.k);
        out += ',' + std::to_string(r.trials);
        out += ',' + format_double(r.mean);
        out += ',' + format_double(r.std_err);
        out += ',' + format_optional(r.theory_value);
        out += ',' + r.theory_kind;
        out += ',' + std::to_string(r.seed_root);
        out.push_back('\n');
    }
    return out;
}

namespace detail {

[[nodiscard]] inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

template <typename T>
[[nodiscard]] T parse_field(std::string_view field, const std::string& where, const char* name) {
    T value{};
    const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
    if (result.ec != std::errc{} || result.ptr != field.data() + field.size())
        throw std::runtime_error(where + ": malformed " + name + " field '" +
                                 std::string(field) + "'");
    return value;
}

} // namespace detail

/// Parse a results CSV.  `origin` names the source (file path) in error
/// messages; the first malformed row aborts the parse.
[[nodiscard]] inline std::vector<ResultRow> parse_result_csv(std::string_view text,
                                                             const std::string& origin) {
    std::vector<ResultRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        const std::string where = origin + ":" + std::to_string(line_no);
        if (line_no == 1) {
            if (line != result_csv_header)
                throw std::runtime_error(where + ": unexpected header '" + std::string(line) +
                                         "'");
            continue;
        }
        if (line.empty())
            continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != 11)
            throw std::runtime_error(where + ": expected 11 fields, got " +
                                     std::to_string(fields.size()));
        ResultRow row;
        row.estimator = std::string(fields[0]);
        if (row.estimator.empty())
            throw std::runtime_error(where + ": empty estimator field");
        row.d = detail::parse_field<std::size_t>(fields[1], where, "d");
        row.sigma_x = detail::parse_field<double>(fields[2], where, "sigma_x");
        row.sigma_n = detail::parse_field<double>(fields[3], where, "sigma_n");
        row.k = detail::parse_field<std::uint64_t>(fields[4], where, "k");
        row.trials = detail::parse_field<std::uint64_t>(fields[5], where, "trials");
        row.mean = detail::parse_field<double>(fields[6], where, "mean");
        row.std_err = detail::parse_field<double>(fields[7], where, "stderr");
        if (!fields[8].empty())
            row.theory_value = detail::parse_field<double>(fields[8], where, "theory_value");
        row.theory_kind = std::string(fields[9]);
        row.seed_root = detail::parse_field<std::uint64_t>(fields[10], where, "seed_root");
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline std::vector<ResultRow> read_result_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_result_csv(text, path.string());
}

/// Write content to "<path>.tmp", then rename over the final path.
inline void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Inspection export for fitted codebooks: one centroid per row, columns
/// c0..c{d-1}.  Not a stability-guaranteed format.
inline void write_codebook_csv(const std::filesystem::path& path, const Codebook& cb) {
    std::string out;
    for (std::size_t j = 0; j < cb.dim; ++j) {
        if (j > 0)
            out.push_back(',');
        out += "c" + std::to_string(j);
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < cb.k; ++i) {
        for (std::size_t j = 0; j < cb.dim; ++j) {
            if (j > 0)
                out.push_back(',');
            out += format_double(cb.centroids[i * cb.dim + j]);
        }
        out.push_back('\n');
    }
    atomic_write_file(path, out);
}

} // namespace klist
