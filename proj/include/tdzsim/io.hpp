#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tdzsim/crossbar.hpp"
#include "tdzsim/errors.hpp"
#include "tdzsim/waveform.hpp"

namespace tdzsim {

inline std::string fmt_g(double x, int precision = 12) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << body;
  if (!out) throw io_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two-column waveform CSV: "# rate=<Hz> unit=<V|A>" then tick,value rows.
inline std::string waveform_csv(const Waveform& w) {
  std::ostringstream o;
  o << "# rate=" << fmt_g(w.rate) << " unit=" << w.unit << "\n";
  o << "tick,value\n";
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    o << i << "," << fmt_g(w.samples[i]) << "\n";
  return o.str();
}

inline Waveform waveform_from_csv(const std::string& text) {
  Waveform w;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string tok;
      while (h >> tok) {
        if (tok.rfind("rate=", 0) == 0) w.rate = std::stod(tok.substr(5));
        if (tok.rfind("unit=", 0) == 0) w.unit = tok.substr(5);
      }
      continue;
    }
    if (line.rfind("tick", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw io_error("waveform csv: bad row");
    w.samples.push_back(std::stod(line.substr(comma + 1)));
  }
  return w;
}

// Grid CSV: "# rows=<n> cols=<m> unit=ohm" header then comma-separated rows.
inline std::string grid_csv(const SensorGrid& g, const std::string& unit = "ohm") {
  std::ostringstream o;
  o << "# rows=" << g.rows << " cols=" << g.cols << " unit=" << unit << "\n";
  const auto& m = unit == "farad" ? g.c_par : g.r;
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j)
      o << (j ? "," : "") << fmt_g(m[static_cast<std::size_t>(i) * g.cols + j]);
    o << "\n";
  }
  return o.str();
}

inline std::string grid_cap_sibling(const std::string& path) {
  const std::filesystem::path p(path);
  std::filesystem::path s = p;
  s.replace_extension();
  s += ".cap";
  s += p.extension();
  return s.string();
}

inline SensorGrid load_grid(const std::string& path, double mux_r_on = 50.0,
                            double line_cap = 0.0) {
  if (!std::filesystem::exists(path))
    throw config_error("grid file not found: " + path);
  const std::string text = read_text_file(path);
  SensorGrid g;
  g.mux_r_on = mux_r_on;
  g.line_cap = line_cap;
  std::istringstream in(text);
  std::string line;
  int declared_rows = -1, declared_cols = -1;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find_last_not_of("\r") + 1);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string tok;
      while (h >> tok) {
        if (tok.rfind("rows=", 0) == 0) declared_rows = std::stoi(tok.substr(5));
        if (tok.rfind("cols=", 0) == 0) declared_cols = std::stoi(tok.substr(5));
      }
      continue;
    }
    std::stringstream row(line);
    std::string cell;
    int ncols = 0;
    while (std::getline(row, cell, ',')) {
      try {
        g.r.push_back(std::stod(cell));
      } catch (...) {
        throw config_error("grid file: bad cell '" + cell + "' in " + path);
      }
      ++ncols;
    }
    if (g.cols == 0) g.cols = ncols;
    else if (ncols != g.cols)
      throw config_error("grid file: ragged rows in " + path);
    ++g.rows;
  }
  if (declared_rows >= 0 && declared_rows != g.rows)
    throw config_error("grid file: row count does not match header");
  if (declared_cols >= 0 && declared_cols != g.cols)
    throw config_error("grid file: col count does not match header");
  validate(g);

  const std::string cap_path = grid_cap_sibling(path);
  if (std::filesystem::exists(cap_path)) {
    const SensorGrid caps = [&] {
      SensorGrid t;
      t.mux_r_on = mux_r_on;
      const std::string ct = read_text_file(cap_path);
      std::istringstream cin2(ct);
      std::string l2;
      while (std::getline(cin2, l2)) {
        if (l2.empty() || l2[0] == '#') continue;
        std::stringstream row(l2);
        std::string cell;
        while (std::getline(row, cell, ',')) t.r.push_back(std::stod(cell));
      }
      return t;
    }();
    if (caps.r.size() != g.count())
      throw config_error("capacitance file shape mismatch: " + cap_path);
    g.c_par = caps.r;
  }
  return g;
}

// P2 ASCII PGM, maxval 255. `values` are mapped affinely from
// [lo, hi] -> [255, 0], i.e. small values render bright.
inline std::string pgm_p2(const std::vector<double>& values, int rows,
                          int cols, double lo, double hi,
                          const std::vector<std::string>& comments) {
  std::ostringstream o;
  o << "P2\n";
  for (const auto& c : comments) o << "# " << c << "\n";
  o << cols << " " << rows << "\n255\n";
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = values[static_cast<std::size_t>(i) * cols + j];
      double t = (v - lo) / (hi - lo);
      t = std::clamp(t, 0.0, 1.0);
      const int pix = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      o << (j ? " " : "") << pix;
    }
    o << "\n";
  }
  return o.str();
}

// Resistance heatmap: affine map of log10(R) over the configured span,
// documented in the header comment.
inline std::string pgm_log_resistance(const std::vector<double>& r_ohm,
                                      int rows, int cols, double log10_min,
                                      double log10_max,
                                      std::vector<std::string> comments) {
  std::vector<double> logs(r_ohm.size());
  for (std::size_t k = 0; k < r_ohm.size(); ++k)
    logs[k] = r_ohm[k] > 0 ? std::log10(r_ohm[k]) : log10_max;
  comments.push_back("pixel = affine map of log10(R/ohm): " +
                     fmt_g(log10_min) + " -> 255, " + fmt_g(log10_max) +
                     " -> 0");
  return pgm_p2(logs, rows, cols, log10_min, log10_max, comments);
}

// Minimal SVG line/scatter chart; enough for error, SNR and THD sweeps.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

inline std::string svg_chart(const std::vector<SvgSeries>& series,
                             const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label, bool log_x,
                             bool log_y) {
  const int w = 860, h = 540, ml = 80, mr = 180, mt = 50, mb = 60;
  const auto txv = [log_x](double v) { return log_x ? std::log10(v) : v; };
  const auto tyv = [log_y](double v) { return log_y ? std::log10(v) : v; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (log_x && s.x[i] <= 0) continue;
      if (log_y && s.y[i] <= 0) continue;
      x0 = std::min(x0, txv(s.x[i]));
      x1 = std::max(x1, txv(s.x[i]));
      y0 = std::min(y0, tyv(s.y[i]));
      y1 = std::max(y1, tyv(s.y[i]));
    }
  if (x0 > x1) { x0 = 0; x1 = 1; }
  if (y0 > y1) { y0 = 0; y1 = 1; }
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const auto px = [&](double v) {
    return ml + (txv(v) - x0) / (x1 - x0) * (w - ml - mr);
  };
  const auto py = [&](double v) {
    return h - mb - (tyv(v) - y0) / (y1 - y0) * (h - mt - mb);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
    << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  o << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"28\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"17\">" << title << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
    << "\" height=\"" << h - mt - mb
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  // 5 ticks per axis
  for (int k = 0; k <= 5; ++k) {
    const double fx = x0 + (x1 - x0) * k / 5.0;
    const double fy = y0 + (y1 - y0) * k / 5.0;
    const double gx = ml + (w - ml - mr) * k / 5.0;
    const double gy = h - mb - (h - mt - mb) * k / 5.0;
    const double vx = log_x ? std::pow(10.0, fx) : fx;
    const double vy = log_y ? std::pow(10.0, fy) : fy;
    o << "<line x1=\"" << gx << "\" y1=\"" << h - mb << "\" x2=\"" << gx
      << "\" y2=\"" << h - mb + 6 << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << gx << "\" y=\"" << h - mb + 22
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" << fmt_g(vx, 4) << "</text>\n";
    o << "<line x1=\"" << ml - 6 << "\" y1=\"" << gy << "\" x2=\"" << ml
      << "\" y2=\"" << gy << "\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << ml - 10 << "\" y=\"" << gy + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << fmt_g(vy, 4) << "</text>\n";
  }
  o << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 16
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">" << x_label << "</text>\n";
  o << "<text x=\"20\" y=\"" << (mt + h - mb) / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
       "transform=\"rotate(-90 20 " << (mt + h - mb) / 2 << ")\">" << y_label
    << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = colors[si % 6];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((log_x && s.x[i] <= 0) || (log_y && s.y[i] <= 0)) continue;
      pts << fmt_g(px(s.x[i]), 8) << "," << fmt_g(py(s.y[i]), 8) << " ";
      o << "<circle cx=\"" << fmt_g(px(s.x[i]), 8) << "\" cy=\""
        << fmt_g(py(s.y[i]), 8) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    o << "<polyline points=\"" << pts.str()
      << "\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\"/>\n";
    const double ly = mt + 18.0 * (si + 1);
    o << "<line x1=\"" << w - mr + 12 << "\" y1=\"" << ly << "\" x2=\""
      << w - mr + 36 << "\" y2=\"" << ly << "\" stroke=\"" << col
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << w - mr + 42 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace tdzsim
