#ifndef ADVBATCH_REPORT_HPP
#define ADVBATCH_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/harness.hpp"

namespace advbatch {

inline constexpr std::string_view kRecordsHeader =
    "family,attack,norm,batch_size,repeat,n_images,n_fooled,success_rate,mean_grad_zero_fraction,wall_time_ms";
inline constexpr std::string_view kAggregateHeader =
    "family,attack,norm,batch_size,mean_success_rate,sd_success_rate,mean_grad_zero_fraction,wall_time_ms";

inline Family parse_family(std::string_view s) {
  for (Family f : kAllFamilies)
    if (s == to_string(f)) return f;
  throw ContractError("unknown family '" + std::string(s) + "'");
}
inline AttackKind parse_attack(std::string_view s) {
  if (s == "fgm") return AttackKind::Fgm;
  if (s == "pgd") return AttackKind::Pgd;
  throw ContractError("unknown attack '" + std::string(s) + "'");
}
inline Norm parse_norm(std::string_view s) {
  if (s == "l2") return Norm::L2;
  if (s == "linf") return Norm::LInf;
  throw ContractError("unknown norm '" + std::string(s) + "'");
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

/// Records as CSV text, sorted by (family, attack, norm, batch_size, repeat).
/// With `timing` off the wall_time_ms column is written as zero, which keeps the
/// file byte-reproducible.
inline std::string records_csv(std::vector<SweepRecord> records, bool timing = true) {
  sort_records(records);
  std::string out(kRecordsHeader);
  out += '\n';
  for (const auto& r : records) {
    out += std::string(to_string(r.family)) + ',' + to_string(r.attack) + ',' + to_string(r.norm) + ',' +
           std::to_string(r.batch_size) + ',' + std::to_string(r.repeat) + ',' + std::to_string(r.n_images) + ',' +
           std::to_string(r.n_fooled) + ',' + detail::fixed6(r.success_rate) + ',' +
           detail::fixed6(r.mean_grad_zero_fraction) + ',' + detail::fixed6(timing ? r.wall_time_ms : 0.0) + '\n';
  }
  return out;
}

inline std::string aggregate_csv(std::vector<AggregateRow> rows, bool timing = true) {
  std::sort(rows.begin(), rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
    return std::tuple(a.family, a.attack, a.norm, a.batch_size) < std::tuple(b.family, b.attack, b.norm, b.batch_size);
  });
  std::string out(kAggregateHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::string(to_string(r.family)) + ',' + to_string(r.attack) + ',' + to_string(r.norm) + ',' +
           std::to_string(r.batch_size) + ',' + detail::fixed6(r.mean_success_rate) + ',' +
           detail::fixed6(r.sd_success_rate) + ',' + detail::fixed6(r.mean_grad_zero_fraction) + ',' +
           detail::fixed6(timing ? r.mean_wall_time_ms : 0.0) + '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = detail::open_for_write(path);
  out << text;
  detail::finish_write(out, path);
}

inline void write_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path, bool timing = true) {
  write_text(path, records_csv(records, timing));
}

inline void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path,
                                bool timing = true) {
  write_text(path, aggregate_csv(rows, timing));
}

/// Parses text produced by records_csv. Budget violations are not part of the file.
inline std::vector<SweepRecord> parse_records_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) throw FormatError("records csv: unexpected header", 0);
  std::vector<SweepRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    if (c.size() != 10) throw FormatError("records csv: line " + std::to_string(line_no) + " has " +
                                          std::to_string(c.size()) + " fields", line_no);
    try {
      SweepRecord r;
      r.family = parse_family(c[0]);
      r.attack = parse_attack(c[1]);
      r.norm = parse_norm(c[2]);
      r.batch_size = std::stoul(c[3]);
      r.repeat = std::stoul(c[4]);
      r.n_images = std::stoul(c[5]);
      r.n_fooled = std::stoul(c[6]);
      r.success_rate = std::stod(c[7]);
      r.mean_grad_zero_fraction = std::stod(c[8]);
      r.wall_time_ms = std::stod(c[9]);
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw FormatError("records csv: line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const ContractError& e) {
      throw FormatError("records csv: line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

inline std::vector<SweepRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_records_csv(ss.str());
}

// ---------------------------------------------------------------------------
// SVG line charts: x = log2(batch size), y = mean success rate in [0,1].
// One polyline per (family, attack). FGM points use convex markers (diamond),
// PGD points use concave markers (four-pointed star).

namespace detail {

inline const char* family_color(Family f) {
  switch (f) {
    case Family::Baseline: return "#1f77b4";
    case Family::BatchCorrected: return "#2ca02c";
    case Family::MixedPrecision: return "#d62728";
    case Family::BatchCorrectedMixedPrecision: return "#9467bd";
  }
  return "#000000";
}

inline std::string marker_points(AttackKind kind, double cx, double cy) {
  char buf[256];
  if (kind == AttackKind::Fgm) {
    constexpr double r = 5.0;
    std::snprintf(buf, sizeof buf, "%.2f,%.2f %.2f,%.2f %.2f,%.2f %.2f,%.2f", cx, cy - r, cx + r, cy, cx, cy + r,
                  cx - r, cy);
  } else {
    constexpr double r = 6.0, q = 2.0;
    std::snprintf(buf, sizeof buf, "%.2f,%.2f %.2f,%.2f %.2f,%.2f %.2f,%.2f %.2f,%.2f %.2f,%.2f %.2f,%.2f %.2f,%.2f",
                  cx, cy - r, cx + q, cy - q, cx + r, cy, cx + q, cy + q, cx, cy + r, cx - q, cy + q, cx - r, cy,
                  cx - q, cy - q);
  }
  return buf;
}

}  // namespace detail

/// Chart for one norm. Throws ContractError when no row has that norm.
inline std::string render_svg(const std::vector<AggregateRow>& all_rows, Norm norm) {
  std::vector<AggregateRow> rows;
  for (const auto& r : all_rows)
    if (r.norm == norm) rows.push_back(r);
  if (rows.empty()) throw ContractError(std::string("render_svg: no rows for norm ") + to_string(norm));

  constexpr double width = 760, height = 480, left = 70, right = 250, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  std::set<std::size_t> sizes;
  for (const auto& r : rows) sizes.insert(r.batch_size);
  const double lo = std::log2(static_cast<double>(*sizes.begin()));
  const double hi = std::log2(static_cast<double>(*sizes.rbegin()));
  auto px = [&](std::size_t b) {
    return hi > lo ? left + (std::log2(static_cast<double>(b)) - lo) / (hi - lo) * pw : left + pw / 2;
  };
  auto py = [&](double rate) { return top + (1.0 - std::clamp(rate, 0.0, 1.0)) * ph; };

  std::ostringstream s;
  char buf[512];
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                width, height, width, height);
  s << buf;
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">%s</text>\n",
                left + pw / 2, norm == Norm::L2 ? "Attack success rate vs. batch size (L2)"
                                                : "Attack success rate vs. batch size (Linf)");
  s << buf;

  // axes and grid
  std::snprintf(buf, sizeof buf,
                "<g class=\"axes\" stroke=\"black\"><line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\"/>"
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\"/></g>\n",
                left, top + ph, left + pw, top + ph, left, top, left, top + ph);
  s << buf;
  for (int i = 0; i <= 4; ++i) {
    const double rate = i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#dddddd\"/>"
                  "<text class=\"ytick\" x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n",
                  left, py(rate), left + pw, py(rate), left - 6, py(rate) + 4, rate);
    s << buf;
  }
  for (std::size_t b : sizes) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                  "<text class=\"xtick\" x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%zu</text>\n",
                  px(b), top + ph, px(b), top + ph + 5, px(b), top + ph + 20, b);
    s << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">batch size (log2 scale)</text>\n"
                "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 18 %.1f)\">"
                "mean attack success rate</text>\n",
                left + pw / 2, height - 15, top + ph / 2, top + ph / 2);
  s << buf;

  // series
  std::map<std::pair<Family, AttackKind>, std::vector<AggregateRow>> series;
  for (const auto& r : rows) series[{r.family, r.attack}].push_back(r);
  std::size_t legend_row = 0;
  for (auto& [key, pts] : series) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.batch_size < b.batch_size; });
    const char* color = detail::family_color(key.first);
    const char* dash = key.second == AttackKind::Fgm ? "6,4" : "none";
    s << "<g class=\"series\" data-family=\"" << to_string(key.first) << "\" data-attack=\"" << to_string(key.second)
      << "\">\n";
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" stroke-dasharray=\"" << dash
      << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(pts[i].batch_size), py(pts[i].mean_success_rate));
      s << buf;
    }
    s << "\"/>\n";
    for (const auto& p : pts)
      s << "<polygon class=\"marker\" fill=\"" << color << "\" points=\""
        << detail::marker_points(key.second, px(p.batch_size), py(p.mean_success_rate)) << "\"/>\n";
    s << "</g>\n";

    const double ly = top + 10 + 20.0 * static_cast<double>(legend_row++);
    const double lx = left + pw + 20;
    std::snprintf(buf, sizeof buf,
                  "<g class=\"legend\"><line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                  "stroke-width=\"2\" stroke-dasharray=\"%s\"/>",
                  lx, ly, lx + 30, ly, color, dash);
    s << buf << "<polygon class=\"legend-marker\" fill=\"" << color << "\" points=\""
      << detail::marker_points(key.second, lx + 15, ly) << "\"/>";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">%s %s</text></g>\n", lx + 38, ly + 4,
                  key.second == AttackKind::Fgm ? "FGM" : "PGD", to_string(key.first));
    s << buf;
  }
  s << "</svg>\n";
  return s.str();
}

/// Writes sweep_l2.svg and/or sweep_linf.svg under `dir` for the norms present.
inline std::vector<std::filesystem::path> render_plot(const std::vector<AggregateRow>& rows,
                                                      const std::filesystem::path& dir) {
  if (rows.empty()) throw ContractError("render_plot: no aggregate rows");
  std::vector<std::filesystem::path> written;
  for (Norm n : {Norm::L2, Norm::LInf}) {
    if (std::none_of(rows.begin(), rows.end(), [&](const AggregateRow& r) { return r.norm == n; })) continue;
    const auto path = dir / (std::string("sweep_") + to_string(n) + ".svg");
    write_text(path, render_svg(rows, n));
    written.push_back(path);
  }
  return written;
}

}  // namespace advbatch

#endif  // ADVBATCH_REPORT_HPP
