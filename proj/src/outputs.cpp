#include "banditlab/outputs.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace banditlab {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw OutputError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

namespace {

constexpr const char* kTraceHeader =
    "t,action_index,reward,instantaneous_regret,cumulative_regret,dictionary_size,"
    "step_wall_time_ns";

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw OutputError("trace csv line " + std::to_string(line) + ": bad field '" +
                      std::string(field) + "'");
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw OutputError("write failed: " + path.string());
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunRecord& record) {
  out << kTraceHeader << '\n';
  for (const auto& r : record.rows) {
    out << r.t << ',' << r.action_index << ',' << format_double(r.reward) << ','
        << format_double(r.instantaneous_regret) << ',' << format_double(r.cumulative_regret) << ','
        << r.dictionary_size << ',' << r.step_wall_time_ns << '\n';
  }
  if (record.error) out << "#error," << one_line(*record.error) << '\n';
}

std::vector<StepRow> read_trace_csv(std::istream& in, std::string* error) {
  std::vector<StepRow> rows;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw OutputError("trace csv: missing or unexpected header");
  }
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.starts_with("#error,")) {
      if (error) *error = line.substr(7);
      continue;
    }
    std::array<std::string_view, 7> fields;
    std::string_view rest = line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i + 1 == fields.size())) {
        throw OutputError("trace csv line " + std::to_string(line_no) + ": expected 7 fields");
      }
      fields[i] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
    }
    StepRow r;
    r.t = parse_field<long>(fields[0], line_no);
    r.action_index = parse_field<long>(fields[1], line_no);
    r.reward = parse_field<double>(fields[2], line_no);
    r.instantaneous_regret = parse_field<double>(fields[3], line_no);
    r.cumulative_regret = parse_field<double>(fields[4], line_no);
    r.dictionary_size = parse_field<long>(fields[5], line_no);
    r.step_wall_time_ns = parse_field<std::int64_t>(fields[6], line_no);
    rows.push_back(r);
  }
  return rows;
}

std::vector<StepRow> read_trace_csv(const std::filesystem::path& path, std::string* error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OutputError("cannot read " + path.string());
  return read_trace_csv(in, error);
}

std::filesystem::path trace_path(const std::filesystem::path& dir, const RunRecord& record) {
  return dir / ("trace_" + record.label + "_" + std::to_string(record.seed) + ".csv");
}

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summaries) {
  out << "label,policy,runs,failed,regret_mean,regret_std,time_mean_s,time_std_s,final_m_mean\n";
  for (const auto& s : summaries) {
    out << s.label << ',' << s.policy << ',' << s.runs << ',' << s.failed << ','
        << format_double(s.regret_mean) << ',' << format_double(s.regret_std) << ','
        << format_double(s.time_mean_s) << ',' << format_double(s.time_std_s) << ','
        << format_double(s.final_m_mean) << '\n';
  }
}

namespace {

struct Curve {
  std::string label;
  std::vector<double> mean;
  std::vector<double> std;
};

Curve mean_curve(const std::vector<RunRecord>& group, CurveKind kind) {
  Curve curve;
  std::vector<std::vector<double>> series;
  for (const auto& rec : group) {
    if (curve.label.empty()) curve.label = rec.label;
    if (!rec.ok() || rec.rows.empty()) continue;
    std::vector<double> values;
    values.reserve(rec.rows.size());
    double acc = 0;
    for (const auto& row : rec.rows) {
      if (kind == CurveKind::cumulative_regret) {
        values.push_back(row.cumulative_regret);
      } else {
        acc += double(row.step_wall_time_ns) * 1e-9;
        values.push_back(acc);
      }
    }
    series.push_back(std::move(values));
  }
  if (series.empty()) return curve;
  std::size_t len = series.front().size();
  for (const auto& s : series) len = std::min(len, s.size());
  std::vector<double> column(series.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < series.size(); ++i) column[i] = series[i][t];
    const auto [m, s] = mean_std(column);
    curve.mean.push_back(m);
    curve.std.push_back(s);
  }
  return curve;
}

}  // namespace

void write_curve_svg(std::ostream& out, const std::vector<std::vector<RunRecord>>& groups,
                     CurveKind kind) {
  static constexpr std::array<const char*, 8> kColors = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  constexpr double width = 800, height = 480, left = 70, right = 170, top = 30, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  std::vector<Curve> curves;
  std::size_t t_max = 1;
  double y_max = 0;
  for (const auto& group : groups) {
    curves.push_back(mean_curve(group, kind));
    const auto& c = curves.back();
    t_max = std::max(t_max, c.mean.size());
    for (std::size_t t = 0; t < c.mean.size(); ++t) y_max = std::max(y_max, c.mean[t] + c.std[t]);
  }
  if (!(y_max > 0)) y_max = 1;

  auto px = [&](std::size_t t) { return left + plot_w * double(t) / double(std::max<std::size_t>(t_max - 1, 1)); };
  auto py = [&](double v) { return top + plot_h * (1.0 - std::clamp(v / y_max, 0.0, 1.0)); };
  const std::size_t stride = std::max<std::size_t>(1, t_max / 400);

  const char* y_label = kind == CurveKind::cumulative_regret ? "cumulative regret" : "wall time (s)";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << left << "\" y1=\"" << top + plot_h
      << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h << "\"/><line x1=\"" << left
      << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/></g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">t</text>\n";
  out << "<text x=\"14\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 14 "
      << top + plot_h / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  out << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">"
      << format_double(y_max) << "</text>\n";
  out << "<text x=\"" << left - 6 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">0</text>\n";
  out << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 16
      << "\" text-anchor=\"middle\">" << t_max << "</text>\n";
  out << "</g>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = kColors[i % kColors.size()];
    std::vector<std::size_t> ts;
    for (std::size_t t = 0; t < c.mean.size(); t += stride) ts.push_back(t);
    if (!c.mean.empty() && ts.back() != c.mean.size() - 1) ts.push_back(c.mean.size() - 1);

    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t t : ts) out << px(t) << ',' << py(c.mean[t] + c.std[t]) << ' ';
    for (auto it = ts.rbegin(); it != ts.rend(); ++it) {
      out << px(*it) << ',' << py(c.mean[*it] - c.std[*it]) << ' ';
    }
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t : ts) out << px(t) << ',' << py(c.mean[t]) << ' ';
    out << "\"/>\n";
    const double ly = top + 16 + 18 * double(i);
    out << "<text font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\" x=\""
        << left + plot_w + 12 << "\" y=\"" << ly << "\">" << c.label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_dictionary_csv(std::ostream& out, const DictionarySnapshot& dict, Index context_dim) {
  out << "index,inclusion_time,prob";
  for (Index r = 0; r < dict.anchors.rows(); ++r) {
    out << (r < context_dim ? ",x" + std::to_string(r) : ",a" + std::to_string(r - context_dim));
  }
  out << '\n';
  for (Index j = 0; j < dict.anchors.cols(); ++j) {
    out << j << ',' << dict.inclusion_times[std::size_t(j)] << ','
        << format_double(dict.probs[std::size_t(j)]);
    for (Index r = 0; r < dict.anchors.rows(); ++r) out << ',' << format_double(dict.anchors(r, j));
    out << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, const std::vector<ComplexityReport<double>>& reports) {
  out << "t,lambda,d_eff,info_gain,valko_d,prop1_lhs,prop1_rhs\n";
  for (const auto& r : reports) {
    out << r.t << ',' << format_double(r.lambda) << ',' << format_double(r.d_eff) << ','
        << format_double(r.info_gain) << ',' << r.valko_d << ',' << format_double(r.prop1_lhs)
        << ',' << format_double(r.prop1_rhs) << '\n';
  }
}

std::vector<std::filesystem::path> emit_outputs(const std::vector<std::vector<RunRecord>>& groups,
                                                const std::filesystem::path& dir,
                                                Index context_dim) {
  if (groups.empty()) throw std::invalid_argument("emit_outputs: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& path, auto&& body) {
    auto out = open_for_write(path);
    body(out);
    check_written(out, path);
    written.push_back(path);
  };

  std::vector<SweepSummary> summaries;
  for (const auto& group : groups) {
    summaries.push_back(summarize(group));
    for (const auto& rec : group) {
      emit(trace_path(dir, rec), [&](std::ostream& out) { write_trace_csv(out, rec); });
      if (rec.dictionary) {
        const auto path =
            dir / ("dictionary_" + rec.label + "_" + std::to_string(rec.seed) + ".csv");
        emit(path, [&](std::ostream& out) { write_dictionary_csv(out, *rec.dictionary, context_dim); });
      }
    }
  }
  emit(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, summaries); });
  emit(dir / "regret.svg",
       [&](std::ostream& out) { write_curve_svg(out, groups, CurveKind::cumulative_regret); });
  emit(dir / "time.svg",
       [&](std::ostream& out) { write_curve_svg(out, groups, CurveKind::cumulative_wall_time); });
  return written;
}

}  // namespace banditlab
