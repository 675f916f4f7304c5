#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrk/harness.hpp"

namespace rrk {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kCsvHeader = "problem,method,p,h,samples,error,stderr,seed";

/// 17 significant digits, locale independent.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Serializes tables in the CSV schema; `stderr` is sample_std / sqrt(M).
inline std::string to_csv(const std::vector<ConvergenceTable>& tables) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& t : tables) {
        for (const auto& r : t.rows) {
            const double se = r.samples ? r.sample_std / std::sqrt(static_cast<double>(r.samples)) : 0.0;
            out += t.problem + ',' + t.method + ',' + format_double(t.p) + ',' + format_double(r.h) + ',' +
                   std::to_string(r.samples) + ',' + format_double(r.error) + ',' + format_double(se) + ',' +
                   std::to_string(t.seed) + '\n';
        }
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << text;
    os.flush();
    if (!os) throw IoError("failed writing '" + path + "'");
}

inline void write_csv(const ConvergenceTable& table, const std::string& path) {
    write_text(path, to_csv({table}));
}

inline void write_csv(const std::vector<ConvergenceTable>& tables, const std::string& path) {
    write_text(path, to_csv(tables));
}

struct CsvRow {
    std::string problem;
    std::string method;
    double p = 0.0;
    double h = 0.0;
    std::size_t samples = 0;
    double error = 0.0;
    double stderr_ = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("line " + std::to_string(line) + ": '" + s + "' is not a number");
    }
}

template <typename Int>
Int parse_int(const std::string& s, std::size_t line) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError("line " + std::to_string(line) + ": '" + s + "' is not an integer");
    return v;
}

}  // namespace detail

inline std::vector<CsvRow> parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw FormatError("missing or wrong CSV header");
    std::vector<CsvRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw FormatError("line " + std::to_string(lineno) + ": expected 8 fields");
        CsvRow r;
        r.problem = f[0];
        r.method = f[1];
        r.p = detail::parse_double(f[2], lineno);
        r.h = detail::parse_double(f[3], lineno);
        r.samples = detail::parse_int<std::size_t>(f[4], lineno);
        r.error = detail::parse_double(f[5], lineno);
        r.stderr_ = detail::parse_double(f[6], lineno);
        r.seed = detail::parse_int<std::uint64_t>(f[7], lineno);
        if (!(r.h > 0.0)) throw FormatError("line " + std::to_string(lineno) + ": h must be positive");
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Log-log convergence plot as standalone SVG: x = n with h = 2^-n,
/// y = log2(error), one polyline per (problem, method).
inline std::string render_svg(const std::vector<CsvRow>& rows) {
    if (rows.size() < 2) throw FormatError("plot needs at least 2 data rows");

    struct Series {
        std::vector<double> n, y, h, err;
    };
    std::vector<std::pair<std::string, Series>> groups;
    for (const auto& r : rows) {
        if (!(r.error > 0.0)) continue;  // log2(0) has no place on the plot
        const std::string key = r.problem + " / " + r.method;
        auto it = std::find_if(groups.begin(), groups.end(), [&](auto& g) { return g.first == key; });
        if (it == groups.end()) {
            groups.emplace_back(key, Series{});
            it = std::prev(groups.end());
        }
        it->second.n.push_back(-std::log2(r.h));
        it->second.y.push_back(std::log2(r.error));
        it->second.h.push_back(r.h);
        it->second.err.push_back(r.error);
    }
    if (groups.empty()) throw FormatError("no positive errors to plot");

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [key, s] : groups) {
        for (double v : s.n) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
        for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
    if (xmax == xmin) xmin -= 1.0, xmax += 1.0;
    if (ymax == ymin) ymin -= 1.0, ymax += 1.0;
    xmin = std::floor(xmin), xmax = std::ceil(xmax);
    ymin = std::floor(ymin), ymax = std::ceil(ymax);

    const double W = 720, H = 480, left = 70, right = 250, top = 30, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    const int xstep = std::max(1, static_cast<int>((xmax - xmin) / 10.0));
    for (int x = static_cast<int>(xmin); x <= static_cast<int>(xmax); x += xstep)
        os << "<line x1=\"" << sx(x) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(x) << "\" y2=\""
           << top + ph + 5 << "\" stroke=\"black\"/><text x=\"" << sx(x) << "\" y=\"" << top + ph + 18
           << "\" text-anchor=\"middle\">" << x << "</text>\n";
    const int ystep = std::max(1, static_cast<int>((ymax - ymin) / 10.0));
    for (int y = static_cast<int>(ymin); y <= static_cast<int>(ymax); y += ystep)
        os << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left << "\" y2=\"" << sy(y)
           << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4
           << "\" text-anchor=\"end\">" << y << "</text>\n";
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15
       << "\" text-anchor=\"middle\">n  (h = 2^-n)</text>\n";
    os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << top + ph / 2 << ")\">log2(error)</text>\n";

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& [key, s] = groups[gi];
        const char* color = palette[gi % std::size(palette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.n.size(); ++i) os << (i ? " " : "") << sx(s.n[i]) << ',' << sy(s.y[i]);
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.n.size(); ++i)
            os << "<circle cx=\"" << sx(s.n[i]) << "\" cy=\"" << sy(s.y[i]) << "\" r=\"2.5\" fill=\"" << color
               << "\"/>\n";

        std::string legend = key;
        if (s.n.size() >= 2) {
            const double slope = s.n.size() >= 3
                                     ? fit_order(s.h, s.err).slope
                                     : (s.y[1] - s.y[0]) / (std::log2(s.h[1]) - std::log2(s.h[0]));
            std::ostringstream sl;
            sl.precision(3);
            sl << std::fixed << slope;
            legend += "  slope=" + sl.str();
        }
        const double ly = top + 10 + 18.0 * static_cast<double>(gi);
        os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 36
           << "\" y=\"" << ly + 4 << "\">" << xml_escape(legend) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void emit_plot(const std::string& csv_path, const std::string& svg_path) {
    write_text(svg_path, render_svg(parse_csv(read_text(csv_path))));
}

}  // namespace rrk
