#pragma once

// Static SVG line plot (log-y) of a results CSV. Output is a pure function of
// the CSV text and the options.

#include <gcslab/harness/table.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace gcslab::harness {

struct PlotOptions
{
    std::string x = "m";
    std::string y = "risk";
    std::string series = "series";          // optional column
    std::string threshold_prefix = "threshold_";
    std::string reference = "minimax_lower"; // optional column drawn as a dashed path
    bool log_y = true;
    std::string title = "risk vs m";
};

namespace detail {

inline double parse_number(const std::string& s, std::size_t line, const std::string& col)
{
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ParseError(line, "column " + col + ": not a number: '" + s + "'");
    }
    return v;
}

inline std::string px(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s)
{
    std::string o;
    for (char c : s) {
        switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

} // namespace detail

inline std::string emit_plot(const std::string& csv_text, const PlotOptions& opt = {})
{
    const ParsedCsv csv = parse_csv(csv_text);
    const auto xc = csv.column(opt.x);
    const auto yc = csv.column(opt.y);
    const std::size_t header_line = csv.comments.size() + 1;
    if (!xc) throw ParseError(header_line, "missing column " + opt.x);
    if (!yc) throw ParseError(header_line, "missing column " + opt.y);
    const auto sc = csv.column(opt.series);
    const auto rc = csv.column(opt.reference);
    std::vector<std::size_t> tcols;
    for (std::size_t i = 0; i < csv.columns.size(); ++i) {
        if (csv.columns[i].rfind(opt.threshold_prefix, 0) == 0) tcols.push_back(i);
    }

    struct Pt { double x, y; };
    std::vector<std::string> order;   // series in first-appearance order
    std::map<std::string, std::vector<Pt>> curves, refs;
    std::vector<std::tuple<std::string, std::string, double>> marks;   // series, column, value
    std::set<std::tuple<std::string, std::string, double>> seen_marks;

    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        const std::size_t line = csv.row_lines[r];
        const std::string name = sc ? row[*sc] : "";
        if (!curves.count(name)) order.push_back(name);
        auto& c = curves[name];
        if (row[*xc].empty() || row[*yc].empty()) continue;
        c.push_back({detail::parse_number(row[*xc], line, opt.x), detail::parse_number(row[*yc], line, opt.y)});
        if (rc && !row[*rc].empty()) {
            refs[name].push_back({c.back().x, detail::parse_number(row[*rc], line, opt.reference)});
        }
        for (std::size_t t : tcols) {
            if (row[t].empty()) continue;
            const double v = detail::parse_number(row[t], line, csv.columns[t]);
            if (!std::isfinite(v)) continue;
            auto key = std::make_tuple(name, csv.columns[t], v);
            if (seen_marks.insert(key).second) marks.push_back(key);
        }
    }

    // ranges
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    auto take_y = [&](double y) {
        if (!std::isfinite(y) || (opt.log_y && y <= 0)) return;
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    };
    for (const auto& [_, pts] : curves) {
        for (const auto& p : pts) {
            if (std::isfinite(p.x)) {
                xmin = std::min(xmin, p.x);
                xmax = std::max(xmax, p.x);
            }
            take_y(p.y);
        }
    }
    for (const auto& [_, pts] : refs) {
        for (const auto& p : pts) take_y(p.y);
    }
    for (const auto& m : marks) {
        xmin = std::min(xmin, std::get<2>(m));
        xmax = std::max(xmax, std::get<2>(m));
    }
    if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; }
    if (xmax <= xmin) { xmin -= 0.5; xmax += 0.5; }
    if (!std::isfinite(ymin)) { ymin = opt.log_y ? 1e-3 : 0; ymax = 1; }
    const double floor_y = opt.log_y ? ymin / 10.0 : ymin;
    if (opt.log_y) {
        ymin = floor_y;
        if (ymax <= ymin) ymax = ymin * 10.0;
    } else if (ymax <= ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    const double W = 720, H = 450, L = 70, R = 20, T = 40, B = 50;
    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double y) {
        if (opt.log_y) {
            const double yy = (std::isfinite(y) && y > floor_y) ? y : floor_y;
            return H - B - (std::log10(yy) - std::log10(ymin)) / (std::log10(ymax) - std::log10(ymin)) * (H - T - B);
        }
        return H - B - (y - ymin) / (ymax - ymin) * (H - T - B);
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << ' ' << H << "\">\n";
    os << "<title>" << detail::xml_escape(opt.title) << "</title>\n";
    for (const auto& c : csv.comments) os << "<desc>" << detail::xml_escape(c) << "</desc>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\"/>\n";
    os << "</g>\n";
    os << "<text x=\"" << (W / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
       << detail::xml_escape(opt.x) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (H / 2) << "\" font-size=\"13\" transform=\"rotate(-90 16 " << (H / 2)
       << ")\" text-anchor=\"middle\">" << detail::xml_escape(opt.y) << (opt.log_y ? " (log)" : "") << "</text>\n";
    os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"11\">" << fmt(xmin) << "</text>\n";
    os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" font-size=\"11\" text-anchor=\"end\">"
       << fmt(xmax) << "</text>\n";
    os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(ymin)
       << "</text>\n";
    os << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(ymax)
       << "</text>\n";

    std::size_t ci = 0;
    for (const auto& name : order) {
        const char* colour = palette[ci++ % (sizeof palette / sizeof *palette)];
        const auto& pts = curves[name];
        if (!pts.empty()) {
            os << "<polyline class=\"series\" data-series=\"" << detail::xml_escape(name) << "\" fill=\"none\" stroke=\""
               << colour << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (i) os << ' ';
                os << detail::px(sx(pts[i].x)) << ',' << detail::px(sy(pts[i].y));
            }
            os << "\"/>\n";
        }
        const auto it = refs.find(name);
        if (it != refs.end() && !it->second.empty()) {
            os << "<path class=\"reference\" data-column=\"" << detail::xml_escape(opt.reference)
               << "\" data-series=\"" << detail::xml_escape(name) << "\" fill=\"none\" stroke=\"" << colour
               << "\" stroke-dasharray=\"4 3\" d=\"";
            for (std::size_t i = 0; i < it->second.size(); ++i) {
                os << (i ? " L" : "M") << detail::px(sx(it->second[i].x)) << ',' << detail::px(sy(it->second[i].y));
            }
            os << "\"/>\n";
        }
    }
    for (const auto& [name, col, v] : marks) {
        os << "<line class=\"threshold\" data-series=\"" << detail::xml_escape(name) << "\" data-column=\""
           << detail::xml_escape(col) << "\" data-value=\"" << fmt(v) << "\" x1=\"" << detail::px(sx(v))
           << "\" y1=\"" << T << "\" x2=\"" << detail::px(sx(v)) << "\" y2=\"" << H - B
           << "\" stroke=\"gray\" stroke-dasharray=\"2 2\"/>\n";
    }
    std::size_t li = 0;
    for (const auto& name : order) {
        if (name.empty()) continue;
        const char* colour = palette[li % (sizeof palette / sizeof *palette)];
        os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 + 14 * static_cast<double>(li)
           << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << colour << "\">" << detail::xml_escape(name)
           << "</text>\n";
        ++li;
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace gcslab::harness
