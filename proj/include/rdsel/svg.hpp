#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/trainer.hpp"

namespace rdsel {

// Self-contained SVG emitters (no external resources, no scripts).
// Numbers are formatted with fixed precision so identical histories give
// byte-identical files.

namespace detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string fmt_coord(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// light-to-dark blue ramp over t in [0, 1]
inline std::string shade(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(222.0 - 180.0 * t));
  const int g = static_cast<int>(std::lround(235.0 - 150.0 * t));
  const int b = static_cast<int>(std::lround(247.0 - 120.0 * t));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("svg: cannot open " + path);
  out << body;
  if (!out) throw IoError("svg: write failure on " + path);
}

}  // namespace detail

// Selection heatmap in the style of the domain-selection figure:
// intermediate domains on the y-axis, epochs on the x-axis, cells shaded
// light to dark by selection order, white when unselected.
inline void emit_selection_heatmap(const TrainingHistory& history, const std::string& path) {
  if (history.epochs.empty()) throw ConfigError("emit_selection_heatmap: empty history");
  const std::size_t k = history.intermediate_ids.size();
  const std::size_t epochs = history.epochs.size();
  const double cell_w = std::max(3.0, std::min(18.0, 720.0 / static_cast<double>(epochs)));
  const double cell_h = 22.0;
  const double left = 70.0, top = 40.0, bottom = 46.0, right = 20.0;
  const double grid_w = cell_w * static_cast<double>(epochs);
  const double grid_h = cell_h * static_cast<double>(k);
  const double width = left + grid_w + right;
  const double height = top + grid_h + bottom;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt_coord(width)
      << "\" height=\"" << detail::fmt_coord(height) << "\" viewBox=\"0 0 "
      << detail::fmt_coord(width) << " " << detail::fmt_coord(height) << "\">\n";
  svg << "<title>domain selection order</title>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << detail::fmt_coord(width) << "\" height=\""
      << detail::fmt_coord(height) << "\" fill=\"white\"/>\n";

  for (std::size_t e = 0; e < epochs; ++e) {
    const EpochRecord& rec = history.epochs[e];
    for (std::size_t j = 0; j < k; ++j) {
      const int rank = j < rec.selection.size() ? rec.selection[j] : 0;
      // row 0 at the bottom, matching ascending domain order upward
      const double x = left + cell_w * static_cast<double>(e);
      const double y = top + grid_h - cell_h * static_cast<double>(j + 1);
      const std::string fill =
          rank == 0 ? "white"
                    : detail::shade(k > 1 ? static_cast<double>(rank - 1) / static_cast<double>(k - 1)
                                          : 1.0);
      svg << "<rect x=\"" << detail::fmt_coord(x) << "\" y=\"" << detail::fmt_coord(y)
          << "\" width=\"" << detail::fmt_coord(cell_w) << "\" height=\""
          << detail::fmt_coord(cell_h) << "\" fill=\"" << fill
          << "\" stroke=\"#cccccc\" stroke-width=\"0.4\"/>\n";
    }
  }

  for (std::size_t j = 0; j < k; ++j) {
    const double y = top + grid_h - cell_h * (static_cast<double>(j) + 0.5);
    std::string label;
    if (j < history.intermediate_meta.size())
      label = detail::fmt(history.intermediate_meta[j]);
    else
      label = "id " + std::to_string(history.intermediate_ids[j]);
    svg << "<text x=\"" << detail::fmt_coord(left - 8.0) << "\" y=\"" << detail::fmt_coord(y + 4.0)
        << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << label
        << "</text>\n";
  }
  svg << "<text x=\"" << detail::fmt_coord(left + grid_w / 2.0) << "\" y=\""
      << detail::fmt_coord(height - 12.0)
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">epoch</text>\n";
  svg << "<text x=\"" << detail::fmt_coord(16.0) << "\" y=\""
      << detail::fmt_coord(top + grid_h / 2.0)
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
      << detail::fmt_coord(top + grid_h / 2.0) << ")\">intermediate domain</text>\n";
  svg << "<text x=\"" << detail::fmt_coord(left + grid_w / 2.0) << "\" y=\"24\""
      << " font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">selection order per epoch</text>\n";
  // epoch ticks: first, middle, last
  for (std::size_t e : std::vector<std::size_t>{0, epochs / 2, epochs - 1}) {
    const double x = left + cell_w * (static_cast<double>(e) + 0.5);
    svg << "<text x=\"" << detail::fmt_coord(x) << "\" y=\""
        << detail::fmt_coord(top + grid_h + 16.0)
        << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << history.epochs[e].epoch << "</text>\n";
  }
  svg << "</svg>\n";
  detail::write_file(path, svg.str());
}

// Mean cumulative reward per epoch, one polyline per history. The raw
// values are embedded in a data-y attribute at six significant digits.
inline void emit_reward_curve(const std::vector<TrainingHistory>& histories,
                              const std::string& path) {
  if (histories.empty()) throw ConfigError("emit_reward_curve: no histories");
  for (const TrainingHistory& h : histories)
    if (h.epochs.empty()) throw ConfigError("emit_reward_curve: empty history");

  const double left = 64.0, top = 28.0, bottom = 44.0, right = 18.0;
  const double plot_w = 640.0, plot_h = 320.0;
  const double width = left + plot_w + right;
  const double height = top + plot_h + bottom;

  double ymin = histories[0].epochs[0].mean_cumulative_reward;
  double ymax = ymin;
  std::size_t max_epochs = 0;
  for (const TrainingHistory& h : histories) {
    max_epochs = std::max(max_epochs, h.epochs.size());
    for (const EpochRecord& rec : h.epochs) {
      ymin = std::min(ymin, rec.mean_cumulative_reward);
      ymax = std::max(ymax, rec.mean_cumulative_reward);
    }
  }
  if (ymax == ymin) {
    ymax += 1.0;
    ymin -= 1.0;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto x_of = [&](std::size_t e) {
    return max_epochs > 1
               ? left + plot_w * static_cast<double>(e) / static_cast<double>(max_epochs - 1)
               : left + plot_w / 2.0;
  };
  auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - ymin) / (ymax - ymin)); };

  const std::vector<std::string> palette{"#1f77b4", "#e6b422", "#2ca02c", "#d62728", "#9467bd"};

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt_coord(width)
      << "\" height=\"" << detail::fmt_coord(height) << "\" viewBox=\"0 0 "
      << detail::fmt_coord(width) << " " << detail::fmt_coord(height) << "\">\n";
  svg << "<title>mean cumulative reward</title>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << detail::fmt_coord(width) << "\" height=\""
      << detail::fmt_coord(height) << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << detail::fmt_coord(left) << "\" y1=\"" << detail::fmt_coord(top)
      << "\" x2=\"" << detail::fmt_coord(left) << "\" y2=\"" << detail::fmt_coord(top + plot_h)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << detail::fmt_coord(left) << "\" y1=\"" << detail::fmt_coord(top + plot_h)
      << "\" x2=\"" << detail::fmt_coord(left + plot_w) << "\" y2=\""
      << detail::fmt_coord(top + plot_h) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // y ticks at min, mid, max
  for (double v : {ymin + pad, (ymin + ymax) / 2.0, ymax - pad}) {
    svg << "<line x1=\"" << detail::fmt_coord(left - 4.0) << "\" y1=\"" << detail::fmt_coord(y_of(v))
        << "\" x2=\"" << detail::fmt_coord(left) << "\" y2=\"" << detail::fmt_coord(y_of(v))
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << detail::fmt_coord(left - 8.0) << "\" y=\""
        << detail::fmt_coord(y_of(v) + 4.0)
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << detail::fmt(v)
        << "</text>\n";
  }
  // x ticks: first and last epoch
  for (std::size_t e : std::vector<std::size_t>{0, max_epochs - 1}) {
    svg << "<text x=\"" << detail::fmt_coord(x_of(e)) << "\" y=\""
        << detail::fmt_coord(top + plot_h + 18.0)
        << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" << (e + 1)
        << "</text>\n";
  }

  for (std::size_t hi = 0; hi < histories.size(); ++hi) {
    const TrainingHistory& h = histories[hi];
    std::ostringstream points, raw;
    for (std::size_t e = 0; e < h.epochs.size(); ++e) {
      if (e) {
        points << " ";
        raw << ",";
      }
      points << detail::fmt_coord(x_of(e)) << "," << detail::fmt_coord(y_of(h.epochs[e].mean_cumulative_reward));
      raw << detail::fmt(h.epochs[e].mean_cumulative_reward);
    }
    svg << "<polyline fill=\"none\" stroke=\"" << palette[hi % palette.size()]
        << "\" stroke-width=\"1.5\" data-y=\"" << raw.str() << "\" points=\"" << points.str()
        << "\"/>\n";
  }

  svg << "<text x=\"" << detail::fmt_coord(left + plot_w / 2.0) << "\" y=\""
      << detail::fmt_coord(height - 10.0)
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">epoch</text>\n";
  svg << "<text x=\"" << detail::fmt_coord(14.0) << "\" y=\""
      << detail::fmt_coord(top + plot_h / 2.0)
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 14 "
      << detail::fmt_coord(top + plot_h / 2.0) << ")\">mean cumulative reward</text>\n";
  svg << "</svg>\n";
  detail::write_file(path, svg.str());
}

}  // namespace rdsel
