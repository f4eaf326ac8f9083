// File formats: trace / event / label / table CSVs, scenario and model text files, plot data.
//
// Every writer takes a provenance string that is emitted as a leading `# ...` comment line;
// every reader skips lines starting with '#'. Numbers are written in shortest round-trip form.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nwd/bayes.hpp"
#include "nwd/hsmm.hpp"
#include "nwd/trace.hpp"

namespace nwd {

std::string format_number(double v);
double parse_number(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const; // throws InvalidInput if absent
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// `time,conductance`. dt is taken from the first two rows (1 for single-row files).
Trace read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace, const std::string& provenance);

/// `time,w1,w2,...`; column names other than time are returned in `names`.
std::vector<Trace> read_multi_trace_csv(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);
void write_multi_trace_csv(const std::filesystem::path& path, const std::vector<Trace>& traces,
                           const std::vector<std::string>& names, const std::string& provenance);

/// `onset,duration,score,width,amplitude,tag`. Reading needs the sample grid to recover indices.
void write_events_csv(const std::filesystem::path& path, const std::vector<DetectionEvent>& events,
                      const std::string& provenance);
std::vector<DetectionEvent> read_events_csv(const std::filesystem::path& path, double dt, double t0 = 0.0);

/// `index,label` with label dock|nodock; indices not listed are unlabeled.
LabelSeq read_labels_csv(const std::filesystem::path& path, std::size_t length);
void write_labels_csv(const std::filesystem::path& path, const LabelSeq& labels, const std::string& provenance);

/// First column modifier id, header row agent ids.
ResponseTable read_table_csv(const std::filesystem::path& path);
void write_table_csv(const std::filesystem::path& path, const ResponseTable& table, const std::string& provenance);

/// `modifier,outcome[,strength]`; outcome is 1/0, yes/no or detected/not_detected.
/// Rows may come in any order and repeat a modifier (replicate wires are majority-voted).
Evidence read_evidence_csv(const std::filesystem::path& path, const ResponseTable& table);
void write_evidence_csv(const std::filesystem::path& path, const ResponseTable& table, const Evidence& evidence,
                        const std::string& provenance);

/// `agent,prior`, normalized to sum to one after reading.
std::vector<double> read_prior_csv(const std::filesystem::path& path, const ResponseTable& table);
void write_posterior_csv(const std::filesystem::path& path, const Posterior& posterior, const std::string& provenance);

/// Text model format, see README.
void write_model(std::ostream& out, const HsmmModel& model);
HsmmModel parse_model(std::istream& in);
void write_model_file(const std::filesystem::path& path, const HsmmModel& model, const std::string& provenance);
HsmmModel read_model_file(const std::filesystem::path& path);

/// Scenario text format, see README.
ArrayScenario parse_scenario(std::istream& in);
ArrayScenario read_scenario_file(const std::filesystem::path& path);

struct PlotSeries {
  std::string name;
  std::vector<double> y;
  std::vector<double> x; // empty: shared index column
  std::string x_name;    // header of the explicit x column, default `<name>_x`
};

/// Columns with a header line. Equal-length series without their own x share an `x` index
/// column named `index_name`; series with explicit x get their own x column.
void emit_plot_data(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                    const std::string& provenance, const std::string& index_name = "x");

} // namespace nwd
