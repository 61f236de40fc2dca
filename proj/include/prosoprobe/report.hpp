#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prosoprobe/core.hpp"

namespace prosoprobe {

// ── bold rule ────────────────────────────────────────────────────────────

// Flags the column entries that are >= the second-largest element counting
// multiplicity, judged at display precision (2 decimals). Two entries that
// render identically are treated as tied, so a column whose top value
// repeats gets exactly those repeats bold and an all-equal column is all
// bold.
inline std::vector<bool> bold_top_two(const std::vector<double>& column,
                                      int decimals = 2) {
  std::vector<bool> flags(column.size(), false);
  if (column.empty()) return flags;
  std::vector<double> shown(column.size());
  for (size_t i = 0; i < column.size(); ++i) {
    shown[i] = round_to(column[i], decimals);
  }
  std::vector<double> sorted = shown;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const double threshold = sorted[std::min<size_t>(1, sorted.size() - 1)];
  for (size_t i = 0; i < column.size(); ++i) {
    flags[i] = shown[i] >= threshold;
  }
  return flags;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

// ── per-layer accuracy table ─────────────────────────────────────────────

// Rows are layers, columns are experiments (dataset/task). Values are
// display units (percent). The text rendering bolds each column's top two
// entries as **x.xx**.
struct LayerTable {
  std::vector<int> layers;

  struct Column {
    std::string label;
    std::vector<double> values;
  };
  std::vector<Column> columns;

  void add_column(std::string label, std::vector<double> values) {
    if (values.size() != layers.size()) {
      throw std::invalid_argument("column '" + label + "' has " +
                                  std::to_string(values.size()) +
                                  " values for " +
                                  std::to_string(layers.size()) + " layers");
    }
    columns.push_back({std::move(label), std::move(values)});
  }

  std::string to_csv(int decimals = 4) const {
    std::ostringstream out;
    out << "layer";
    for (const auto& c : columns) out << "," << detail::csv_escape(c.label);
    out << "\n";
    for (size_t r = 0; r < layers.size(); ++r) {
      out << layers[r];
      for (const auto& c : columns) {
        out << "," << fixed_str(c.values[r], decimals);
      }
      out << "\n";
    }
    return out.str();
  }

  std::string to_text(int decimals = 2) const {
    std::vector<std::vector<std::string>> cells(layers.size());
    std::vector<size_t> widths;
    widths.push_back(5);  // "layer"
    for (size_t r = 0; r < layers.size(); ++r) {
      widths[0] = std::max(widths[0], std::to_string(layers[r]).size());
    }
    for (const auto& c : columns) {
      const auto bold = bold_top_two(c.values, decimals);
      size_t w = c.label.size();
      for (size_t r = 0; r < layers.size(); ++r) {
        std::string cell = fixed_str(c.values[r], decimals);
        if (bold[r]) cell = "**" + cell + "**";
        cells[r].push_back(cell);
        w = std::max(w, cells[r].back().size());
      }
      widths.push_back(w);
    }
    std::ostringstream out;
    out << detail::pad_right("layer", widths[0]);
    for (size_t c = 0; c < columns.size(); ++c) {
      out << "  " << detail::pad_left(columns[c].label, widths[c + 1]);
    }
    out << "\n";
    for (size_t r = 0; r < layers.size(); ++r) {
      out << detail::pad_right(std::to_string(layers[r]), widths[0]);
      for (size_t c = 0; c < columns.size(); ++c) {
        out << "  " << detail::pad_left(cells[r][c], widths[c + 1]);
      }
      out << "\n";
    }
    return out.str();
  }
};

// ── overall accuracy table ───────────────────────────────────────────────

// One row per (mode, task) experiment, one column per dataset. Cells can be
// missing (rendered as an em dash) and every missing cell is surfaced as a
// warning so a partial report is never mistaken for a complete one.
struct OverallTable {
  std::vector<std::string> datasets;

  struct Row {
    std::string label;
    std::vector<std::optional<double>> values;
  };
  std::vector<Row> rows;

  void add_row(std::string label, std::vector<std::optional<double>> values) {
    if (values.size() != datasets.size()) {
      throw std::invalid_argument("row '" + label + "' has " +
                                  std::to_string(values.size()) +
                                  " cells for " +
                                  std::to_string(datasets.size()) +
                                  " datasets");
    }
    rows.push_back({std::move(label), std::move(values)});
  }

  std::vector<std::string> missing_cells() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
      for (size_t c = 0; c < r.values.size(); ++c) {
        if (!r.values[c]) {
          out.push_back("no result for " + r.label + " on " + datasets[c]);
        }
      }
    }
    return out;
  }

  std::string to_csv(int decimals = 2) const {
    std::ostringstream out;
    out << "experiment";
    for (const auto& d : datasets) out << "," << detail::csv_escape(d);
    out << "\n";
    for (const auto& r : rows) {
      out << detail::csv_escape(r.label);
      for (const auto& v : r.values) {
        out << ",";
        if (v) out << fixed_str(*v, decimals);
      }
      out << "\n";
    }
    return out.str();
  }

  std::string to_text(int decimals = 2) const {
    std::vector<size_t> widths;
    size_t label_w = std::string("experiment").size();
    for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
    for (size_t c = 0; c < datasets.size(); ++c) {
      size_t w = datasets[c].size();
      for (const auto& r : rows) {
        const std::string cell =
            r.values[c] ? fixed_str(*r.values[c], decimals) : "—";
        w = std::max(w, cell.size());
      }
      widths.push_back(w);
    }
    std::ostringstream out;
    out << detail::pad_right("experiment", label_w);
    for (size_t c = 0; c < datasets.size(); ++c) {
      out << "  " << detail::pad_left(datasets[c], widths[c]);
    }
    out << "\n";
    for (const auto& r : rows) {
      out << detail::pad_right(r.label, label_w);
      for (size_t c = 0; c < datasets.size(); ++c) {
        const std::string cell =
            r.values[c] ? fixed_str(*r.values[c], decimals) : "—";
        out << "  " << detail::pad_left(cell, widths[c]);
      }
      out << "\n";
    }
    for (const auto& w : missing_cells()) out << "warning: " << w << "\n";
    return out.str();
  }
};

// ── mix weight figure ────────────────────────────────────────────────────

struct WeightSeries {
  std::string label;
  std::vector<double> weights;  // one per layer, ordered from layer 0
};

struct WeightPanel {
  std::string title;
  std::vector<WeightSeries> series;
};

// The CSV twin of the figure: the exact numbers the SVG bars encode.
inline std::string weight_plot_csv(const std::vector<WeightPanel>& panels) {
  std::ostringstream out;
  out << "panel,series,layer,weight\n";
  for (const auto& p : panels) {
    for (const auto& s : p.series) {
      for (size_t l = 0; l < s.weights.size(); ++l) {
        out << detail::csv_escape(p.title) << "," << detail::csv_escape(s.label)
            << "," << l << "," << fixed_str(s.weights[l], 6) << "\n";
      }
    }
  }
  return out.str();
}

// Grouped bar chart, one sub-plot per panel, drawn by hand. Every bar
// carries a <title> with the same 6-decimal value the CSV twin reports.
inline std::string weight_plot_svg(const std::vector<WeightPanel>& panels) {
  static const char* kPalette[] = {"#4878a8", "#e08840", "#58a058", "#b05050",
                                   "#8868a8", "#a09048"};
  const int panel_w = 860, panel_h = 250;
  const int margin_l = 56, margin_r = 16, margin_t = 36, margin_b = 40;
  const int width = panel_w;
  const int height = static_cast<int>(panels.size()) * panel_h;

  double max_w = 0.0;
  size_t max_layers = 0;
  for (const auto& p : panels) {
    for (const auto& s : p.series) {
      max_layers = std::max(max_layers, s.weights.size());
      for (double w : s.weights) max_w = std::max(max_w, w);
    }
  }
  if (max_layers == 0) throw std::invalid_argument("weight plot has no data");
  double y_max = 0.1;
  while (y_max < max_w) y_max += 0.1;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

  for (size_t pi = 0; pi < panels.size(); ++pi) {
    const WeightPanel& p = panels[pi];
    const int top = static_cast<int>(pi) * panel_h;
    const int plot_x = margin_l;
    const int plot_y = top + margin_t;
    const int plot_w = panel_w - margin_l - margin_r;
    const int plot_h = panel_h - margin_t - margin_b;

    svg << "<text x=\"" << margin_l << "\" y=\"" << top + 22
        << "\" font-family=\"sans-serif\" font-size=\"14\" "
           "font-weight=\"bold\">"
        << p.title << "</text>\n";

    // y grid and labels every 0.1
    for (double y = 0.0; y <= y_max + 1e-9; y += 0.1) {
      const double yy = plot_y + plot_h - (y / y_max) * plot_h;
      svg << "<line x1=\"" << plot_x << "\" y1=\"" << yy << "\" x2=\""
          << plot_x + plot_w << "\" y2=\"" << yy
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << plot_x - 8 << "\" y=\"" << yy + 4
          << "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"end\">"
          << fixed_str(y, 1) << "</text>\n";
    }

    const double group_w = static_cast<double>(plot_w) / max_layers;
    const size_t n_series = p.series.size();
    const double bar_w = n_series ? (group_w * 0.8) / n_series : group_w;

    for (size_t si = 0; si < n_series; ++si) {
      const WeightSeries& s = p.series[si];
      const char* color = kPalette[si % std::size(kPalette)];
      for (size_t l = 0; l < s.weights.size(); ++l) {
        const double h = (s.weights[l] / y_max) * plot_h;
        const double x = plot_x + l * group_w + group_w * 0.1 + si * bar_w;
        const double y = plot_y + plot_h - h;
        svg << "<rect x=\"" << fixed_str(x, 2) << "\" y=\"" << fixed_str(y, 2)
            << "\" width=\"" << fixed_str(bar_w, 2) << "\" height=\""
            << fixed_str(h, 2) << "\" fill=\"" << color << "\">"
            << "<title>" << s.label << " layer " << l << ": "
            << fixed_str(s.weights[l], 6) << "</title></rect>\n";
      }
      // legend swatch
      const double lx = plot_x + plot_w - 150.0;
      const double ly = top + 14.0 + si * 16.0;
      svg << "<rect x=\"" << lx << "\" y=\"" << ly
          << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
      svg << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 10
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
          << "</text>\n";
    }

    // x labels: layer indices
    for (size_t l = 0; l < max_layers; ++l) {
      const double x = plot_x + l * group_w + group_w * 0.5;
      svg << "<text x=\"" << fixed_str(x, 2) << "\" y=\""
          << plot_y + plot_h + 16
          << "\" font-family=\"sans-serif\" font-size=\"11\" "
             "text-anchor=\"middle\">"
          << l << "</text>\n";
    }
    svg << "<text x=\"" << plot_x + plot_w / 2 << "\" y=\""
        << plot_y + plot_h + 32
        << "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\">layer</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace prosoprobe
