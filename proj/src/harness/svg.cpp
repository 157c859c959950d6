#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "a2a/error.hpp"
#include "a2a/harness.hpp"

namespace a2a::harness {

namespace {

constexpr double kWidth = 820;
constexpr double kHeight = 500;
constexpr double kLeft = 80;
constexpr double kRight = 250;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
                                    "#7f7f7f", "#bcbd22"};

struct Series {
  std::string label;
  bool dashed = false;
  std::vector<std::pair<double, double>> points;
};

struct Axis {
  double lo = 0;  // log10
  double hi = 1;

  static Axis over(const std::vector<double>& values) {
    Axis a;
    a.lo = std::log10(*std::ranges::min_element(values));
    a.hi = std::log10(*std::ranges::max_element(values));
    if (a.hi - a.lo < 1e-9) {
      a.lo -= 0.5;
      a.hi += 0.5;
    }
    return a;
  }
  double frac(double v) const { return (std::log10(v) - lo) / (hi - lo); }
};

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  if (v >= 1e-2 && v < 1e5 && v == std::floor(v)) return fmt::format("{}", v);
  return fmt::format("{:.0e}", v);
}

std::string render(const std::string& title, const std::string& x_label,
                   const std::vector<double>& x_ticks,
                   const std::vector<Series>& series) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const Axis ax = Axis::over(xs);
  Axis ay = Axis::over(ys);
  ay.lo = std::floor(ay.lo);
  ay.hi = std::ceil(ay.hi);
  if (ay.hi <= ay.lo) ay.hi = ay.lo + 1;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + ax.frac(x) * pw; };
  auto py = [&](double y) { return kTop + (1 - ay.frac(y)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  svg += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n",
                     kWidth, kHeight);
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
      kLeft + pw / 2, escape(title));
  svg += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      kLeft, kTop, pw, ph);

  for (double x : x_ticks) {
    const double gx = px(x);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" "
        "stroke=\"#dddddd\"/>\n",
        gx, kTop, kTop + ph);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", gx,
        kTop + ph + 18, tick_label(x));
  }
  for (int e = static_cast<int>(ay.lo); e <= static_cast<int>(ay.hi); ++e) {
    const double v = std::pow(10.0, e);
    const double gy = py(v);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"#dddddd\"/>\n",
        kLeft, gy, kLeft + pw);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">1e{}</text>\n",
        kLeft - 6, gy + 4, e);
  }
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
      kLeft + pw / 2, kHeight - 18, escape(x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{0:.1f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 18 {0:.1f})\">predicted time (s)</text>\n",
      kTop + ph / 2);

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (auto [x, y] : s.points) {
      if (!pts.empty()) pts += ' ';
      pts += fmt::format("{:.2f},{:.2f}", px(x), py(y));
    }
    svg += fmt::format(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
        pts, color, s.dashed ? " stroke-dasharray=\"6 4\"" : "");
    const double ly = kTop + 10 + 16 * static_cast<double>(i);
    const double lx = kWidth - kRight + 14;
    svg += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" "
        "stroke-width=\"1.5\"{}/>\n",
        lx, ly, lx + 24, ly, color, s.dashed ? " stroke-dasharray=\"6 4\"" : "");
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", lx + 30,
                       ly + 4, escape(s.label));
  }
  svg += "</svg>\n";
  return svg;
}

using SeriesKey = std::tuple<int, std::string, std::string, int, int>;

int algorithm_order(const std::string& name) {
  for (std::size_t i = 0; i < std::size(kAllAlgorithms); ++i) {
    if (to_string(kAllAlgorithms[i]) == name) return static_cast<int>(i);
  }
  return static_cast<int>(std::size(kAllAlgorithms));
}

// Groups rows passing `keep` into series, x taken from `x_of`.
template <typename Keep, typename X>
std::vector<Series> collect(const std::vector<CsvRow>& rows, bool several_ppn,
                            Keep keep, X x_of) {
  std::map<SeriesKey, Series> by_key;
  for (const auto& r : rows) {
    if (!keep(r) || r.predicted_total_s <= 0) continue;
    SeriesKey key{algorithm_order(r.algorithm), r.algorithm, r.impl, r.ppn,
                  r.group_size};
    auto& s = by_key[key];
    if (s.label.empty()) {
      s.label = r.algorithm;
      if (r.impl != "none") s.label += " " + r.impl;
      if (r.algorithm == "hierarchical" || r.algorithm == "node-aware" ||
          r.algorithm == "multileader-node-aware") {
        s.label += fmt::format(" g={}", r.group_size);
      }
      if (several_ppn) s.label += fmt::format(" ppn={}", r.ppn);
      s.dashed = r.impl == "nonblocking";
    }
    s.points.emplace_back(x_of(r), r.predicted_total_s);
  }
  std::vector<Series> out;
  for (auto& [key, s] : by_key) {
    std::ranges::sort(s.points);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<PlotFile> make_plots(const std::vector<CsvRow>& rows,
                                 const std::string& stem) {
  std::vector<PlotFile> plots;
  if (rows.empty()) return plots;

  std::set<int> nodes, ppns;
  std::set<std::uint64_t> sizes;
  for (const auto& r : rows) {
    nodes.insert(r.n_nodes);
    ppns.insert(r.ppn);
    sizes.insert(r.block_bytes);
  }
  const bool several_ppn = ppns.size() > 1;
  const int max_nodes = *nodes.rbegin();

  auto bytes_series = collect(
      rows, several_ppn, [&](const CsvRow& r) { return r.n_nodes == max_nodes; },
      [](const CsvRow& r) { return static_cast<double>(r.block_bytes); });
  if (!bytes_series.empty()) {
    std::vector<double> ticks;
    for (auto s : sizes) ticks.push_back(static_cast<double>(s));
    plots.push_back(
        {fmt::format("{}_bytes_n{}.svg", stem, max_nodes),
         render(fmt::format("predicted time vs block size, {} nodes", max_nodes),
                "bytes per block", ticks, bytes_series)});
  }

  std::vector<std::uint64_t> views{*sizes.begin()};
  if (*sizes.rbegin() != *sizes.begin()) views.push_back(*sizes.rbegin());
  std::vector<double> node_ticks;
  for (int n : nodes) node_ticks.push_back(n);
  for (auto s : views) {
    auto node_series = collect(
        rows, several_ppn, [&](const CsvRow& r) { return r.block_bytes == s; },
        [](const CsvRow& r) { return static_cast<double>(r.n_nodes); });
    if (node_series.empty()) continue;
    plots.push_back(
        {fmt::format("{}_nodes_s{}.svg", stem, s),
         render(fmt::format("predicted time vs node count, {} bytes", s),
                "nodes", node_ticks, node_series)});
  }
  return plots;
}

void write_plots(const std::vector<PlotFile>& plots,
                 const std::filesystem::path& dir) {
  for (const auto& plot : plots) {
    const auto path = dir / plot.name;
    std::ofstream out(path, std::ios::binary);
    out << plot.svg;
    if (!out) throw ConfigError("cannot write plot " + path.string());
  }
}

}  // namespace a2a::harness
