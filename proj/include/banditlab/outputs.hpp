#pragma once

// CSV and SVG writers for run records.
//
//   trace_<label>_<seed>.csv       per-step rows
//   summary.csv                    per-configuration aggregates
//   regret.svg, time.svg           mean curves with a shaded +-1 std band
//   dictionary_<label>_<seed>.csv  final dictionary (when requested)
//   diagnostics.csv                complexity reports

#include "banditlab/diagnostics.hpp"
#include "banditlab/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace banditlab {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

void write_trace_csv(std::ostream& out, const RunRecord& record);
/// Rows of a trace CSV; the error marker row, if any, is returned in `error`.
std::vector<StepRow> read_trace_csv(std::istream& in, std::string* error = nullptr);
std::vector<StepRow> read_trace_csv(const std::filesystem::path& path, std::string* error = nullptr);

std::filesystem::path trace_path(const std::filesystem::path& dir, const RunRecord& record);

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summaries);

enum class CurveKind { cumulative_regret, cumulative_wall_time };

/// One polyline per configuration (mean across its runs) and one shaded
/// polygon for the +-1 std band.
void write_curve_svg(std::ostream& out, const std::vector<std::vector<RunRecord>>& groups,
                     CurveKind kind);

void write_dictionary_csv(std::ostream& out, const DictionarySnapshot& dict, Index context_dim);

void write_diagnostics_csv(std::ostream& out, const std::vector<ComplexityReport<double>>& reports);

/// Writes traces, summary and both plots (plus dictionaries when present)
/// under `dir`, creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const std::vector<std::vector<RunRecord>>& groups,
                                                const std::filesystem::path& dir,
                                                Index context_dim);

}  // namespace banditlab
