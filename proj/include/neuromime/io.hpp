#pragma once

// File emitters: CSV, JSON, SVG plots, binary PGM and packed bit streams.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuromime/core/error.hpp"
#include "neuromime/core/image.hpp"
#include "neuromime/core/series.hpp"

namespace neuromime::io {

/// Shortest form that reparses to the same double (17 significant digits).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

inline void finish(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace detail

/// Column table: header names with one value vector per column.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  void add(std::string name, std::vector<double> values) {
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
  }
};

inline void write_csv(const std::filesystem::path& path, const Table& t) {
  if (t.header.empty() || t.header.size() != t.columns.size()) throw InvalidInput("write_csv: header/column mismatch");
  const std::size_t n = t.rows();
  if (n == 0) throw InvalidInput("write_csv: no rows");
  for (const auto& c : t.columns)
    if (c.size() != n) throw InvalidInput("write_csv: ragged columns");
  auto f = detail::open_out(path);
  for (std::size_t j = 0; j < t.header.size(); ++j) f << (j ? "," : "") << t.header[j];
  f << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) f << (j ? "," : "") << format_double(t.columns[j][i]);
    f << '\n';
  }
  detail::finish(f, path);
}

inline void write_csv(const std::filesystem::path& path, const TimeSeries& s, const std::string& name = "value") {
  if (s.empty()) throw InvalidInput("write_csv: empty series");
  Table t;
  std::vector<double> time(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) time[k] = s.time(k);
  t.add("t", std::move(time));
  t.add(name, s.samples);
  write_csv(path, t);
}

inline Table read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read '" + path.string() + "'");
  Table t;
  std::string line;
  if (!std::getline(f, line)) throw InvalidInput("read_csv: empty file");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  t.columns.assign(t.header.size(), {});
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t j = 0;
    for (std::string cell; std::getline(ls, cell, ','); ++j) {
      if (j >= t.columns.size()) throw InvalidInput("read_csv: row wider than header");
      t.columns[j].push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (j != t.columns.size()) throw InvalidInput("read_csv: row narrower than header");
  }
  return t;
}

/// nlohmann::json objects keep keys sorted, so dumps are stable.
inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto f = detail::open_out(path);
  f << j.dump(2) << '\n';
  detail::finish(f, path);
}

// ---------------------------------------------------------------------------
// Binary PGM (P5, maxval 255).

inline void write_pgm(const std::filesystem::path& path, const Image& img) {
  img.validate("write_pgm");
  auto f = detail::open_out(path, true);
  f << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  detail::finish(f, path);
}

inline Image read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read '" + path.string() + "'");
  auto token = [&]() {
    std::string tok;
    while (true) {
      const int c = f.get();
      if (c == EOF) break;
      if (c == '#') {
        std::string skip;
        std::getline(f, skip);
        if (!tok.empty()) break;
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    return tok;
  };
  if (token() != "P5") throw InvalidInput("read_pgm: not a binary PGM");
  Image img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    if (std::stoul(token()) != 255) throw InvalidInput("read_pgm: only maxval 255 is supported");
  } catch (const std::logic_error&) {
    throw InvalidInput("read_pgm: malformed header");
  }
  img.pixels.resize(img.width * img.height);
  f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw InvalidInput("read_pgm: truncated data");
  img.validate("read_pgm");
  return img;
}

// ---------------------------------------------------------------------------
// Bits packed MSB-first, plus a JSON sidecar with the count and source.

inline void write_bits(const std::filesystem::path& path, const std::vector<std::uint8_t>& bits,
                       const std::string& source) {
  std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < bits.size(); ++k)
    if (bits[k]) packed[k / 8] |= static_cast<std::uint8_t>(0x80u >> (k % 8));
  auto f = detail::open_out(path, true);
  f.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  detail::finish(f, path);
  write_json(std::filesystem::path(path.string() + ".json"),
             nlohmann::json{{"n_bits", bits.size()}, {"source", source}, {"packing", "msb-first"}});
}

inline std::vector<std::uint8_t> read_bits(const std::filesystem::path& path) {
  std::ifstream meta(path.string() + ".json");
  if (!meta) throw Error("cannot read '" + path.string() + ".json'");
  const auto j = nlohmann::json::parse(meta);
  const auto n = j.at("n_bits").get<std::size_t>();
  std::ifstream f(path, std::ios::binary);
  std::vector<std::uint8_t> packed((n + 7) / 8);
  f.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (f.gcount() != static_cast<std::streamsize>(packed.size())) throw InvalidInput("read_bits: truncated data");
  std::vector<std::uint8_t> bits(n);
  for (std::size_t k = 0; k < n; ++k) bits[k] = (packed[k / 8] >> (7 - k % 8)) & 1u;
  return bits;
}

// ---------------------------------------------------------------------------
// Minimal SVG plots.

struct Curve {
  std::string name;
  std::vector<double> x, y;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

inline void write_svg_lines(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<Curve>& curves, bool log_x = false) {
  if (curves.empty()) throw InvalidInput("write_svg_lines: no curves");
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  for (const auto& c : curves) {
    if (c.x.size() != c.y.size() || c.x.empty()) throw InvalidInput("write_svg_lines: bad curve '" + c.name + "'");
    for (std::size_t k = 0; k < c.x.size(); ++k) {
      if (!std::isfinite(c.y[k]) || !std::isfinite(tx(c.x[k]))) continue;
      x0 = std::min(x0, tx(c.x[k]));
      x1 = std::max(x1, tx(c.x[k]));
      y0 = std::min(y0, c.y[k]);
      y1 = std::max(y1, c.y[k]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  auto px = [&](double x) { return ml + (tx(x) - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };
  static constexpr std::array<const char*, 6> colours{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  auto f = detail::open_out(path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::svg_escape(title)
    << "</text>\n"
    << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
    << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << detail::svg_escape(x_label) << (log_x ? " (log)" : "") << "</text>\n"
    << "<text x=\"14\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << h / 2
    << ")\" text-anchor=\"middle\">" << detail::svg_escape(y_label) << "</text>\n"
    << "<text x=\"" << ml << "\" y=\"" << h - mb + 15 << "\" font-size=\"10\">" << format_double(log_x ? std::pow(10, x0) : x0)
    << "</text>\n<text x=\"" << w - mr << "\" y=\"" << h - mb + 15 << "\" font-size=\"10\" text-anchor=\"end\">"
    << format_double(log_x ? std::pow(10, x1) : x1) << "</text>\n<text x=\"" << ml - 4 << "\" y=\"" << h - mb
    << "\" font-size=\"10\" text-anchor=\"end\">" << format_double(y0) << "</text>\n<text x=\"" << ml - 4
    << "\" y=\"" << mt + 10 << "\" font-size=\"10\" text-anchor=\"end\">" << format_double(y1) << "</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    f << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << colours[i % colours.size()] << "\" points=\"";
    for (std::size_t k = 0; k < c.x.size(); ++k)
      if (std::isfinite(c.y[k]) && std::isfinite(tx(c.x[k]))) f << detail::fmt(px(c.x[k])) << ',' << detail::fmt(py(c.y[k])) << ' ';
    f << "\"/>\n<text x=\"" << w - mr - 6 << "\" y=\"" << mt + 16 + 14 * static_cast<double>(i)
      << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << colours[i % colours.size()] << "\">"
      << detail::svg_escape(c.name) << "</text>\n";
  }
  f << "</svg>\n";
  detail::finish(f, path);
}

/// Heat map of an integer-coded grid; codes map to a fixed hue cycle.
inline void write_svg_heatmap(const std::filesystem::path& path, const std::string& title,
                              const std::vector<double>& xs, const std::vector<double>& ys,
                              const std::vector<int>& codes_row_major_x) {
  if (xs.empty() || ys.empty() || codes_row_major_x.size() != xs.size() * ys.size())
    throw InvalidInput("write_svg_heatmap: grid size mismatch");
  const double w = 640, h = 640, m = 50;
  const double cw = (w - 2 * m) / static_cast<double>(xs.size());
  const double ch = (h - 2 * m) / static_cast<double>(ys.size());
  auto f = detail::open_out(path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << detail::svg_escape(title)
    << "</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const int code = codes_row_major_x[i * ys.size() + j];
      const int hue = (code * 47) % 360;
      const int light = code == 0 ? 95 : 55;
      f << "<rect x=\"" << detail::fmt(m + static_cast<double>(i) * cw) << "\" y=\""
        << detail::fmt(h - m - static_cast<double>(j + 1) * ch) << "\" width=\"" << detail::fmt(cw + 0.5)
        << "\" height=\"" << detail::fmt(ch + 0.5) << "\" fill=\"hsl(" << hue << ",60%," << light << "%)\"/>\n";
    }
  f << "<text x=\"" << m << "\" y=\"" << h - m + 16 << "\" font-size=\"10\">" << format_double(xs.front())
    << "</text>\n<text x=\"" << w - m << "\" y=\"" << h - m + 16 << "\" font-size=\"10\" text-anchor=\"end\">"
    << format_double(xs.back()) << "</text>\n<text x=\"" << m - 4 << "\" y=\"" << h - m
    << "\" font-size=\"10\" text-anchor=\"end\">" << format_double(ys.front()) << "</text>\n<text x=\"" << m - 4
    << "\" y=\"" << m + 10 << "\" font-size=\"10\" text-anchor=\"end\">" << format_double(ys.back()) << "</text>\n</svg>\n";
  detail::finish(f, path);
}

}  // namespace neuromime::io
