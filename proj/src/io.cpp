#include "nwd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace nwd {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path, const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  if (!provenance.empty()) out << "# " << provenance << '\n';
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read '" + path.string() + "'");
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

double grid_dt(const std::vector<double>& times) {
  if (times.size() < 2) return 1.0;
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw InvalidInput("time column must be increasing");
  for (std::size_t i = 2; i < times.size(); ++i) {
    const double expected = times[0] + dt * static_cast<double>(i);
    if (std::abs(times[i] - expected) > 1e-6 * std::max(1.0, std::abs(expected)))
      throw InvalidInput("time column is not uniformly sampled");
  }
  return dt;
}

const char* label_name(Label l) { return l == Label::Dock ? "dock" : "nodock"; }

} // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (t.empty() || res.ec != std::errc() || res.ptr != last) throw InvalidInput("malformed number '" + t + "'");
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidInput("missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  bool have_header = false;
  for (std::string line; std::getline(in, line);) {
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto fields = split(s, ',');
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) throw InvalidInput("CSV row has " + std::to_string(fields.size()) +
                                                             " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InvalidInput("CSV has no header");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_csv(in);
}

Trace read_trace_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ct = t.column("time");
  const std::size_t cg = t.column("conductance");
  std::vector<double> times;
  Trace trace;
  for (const auto& row : t.rows) {
    times.push_back(parse_number(row[ct]));
    trace.samples.push_back(parse_number(row[cg]));
  }
  if (trace.samples.empty()) throw InvalidInput("trace file '" + path.string() + "' has no samples");
  trace.dt = grid_dt(times);
  trace.t0 = times.front();
  validate(trace);
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace, const std::string& provenance) {
  auto out = open_out(path, provenance);
  out << "time,conductance\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << format_number(trace.time(i)) << ',' << format_number(trace.samples[i]) << '\n';
  finish(out, path);
}

std::vector<Trace> read_multi_trace_csv(const std::filesystem::path& path, std::vector<std::string>* names) {
  const CsvTable t = read_csv(path);
  const std::size_t ct = t.column("time");
  if (t.header.size() < 2) throw InvalidInput("multi-wire CSV needs at least one wire column");
  std::vector<double> times;
  for (const auto& row : t.rows) times.push_back(parse_number(row[ct]));
  if (times.empty()) throw InvalidInput("multi-wire CSV has no samples");
  const double dt = grid_dt(times);

  std::vector<Trace> traces;
  if (names) names->clear();
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == ct) continue;
    Trace tr;
    tr.dt = dt;
    tr.t0 = times.front();
    for (const auto& row : t.rows) tr.samples.push_back(parse_number(row[c]));
    validate(tr);
    traces.push_back(std::move(tr));
    if (names) names->push_back(t.header[c]);
  }
  return traces;
}

void write_multi_trace_csv(const std::filesystem::path& path, const std::vector<Trace>& traces,
                           const std::vector<std::string>& names, const std::string& provenance) {
  if (traces.empty()) throw InvalidInput("no traces to write");
  if (names.size() != traces.size()) throw InvalidInput("one name per trace required");
  for (const auto& t : traces)
    if (t.size() != traces.front().size()) throw InvalidInput("traces differ in length");
  auto out = open_out(path, provenance);
  out << "time";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < traces.front().size(); ++i) {
    out << format_number(traces.front().time(i));
    for (const auto& t : traces) out << ',' << format_number(t.samples[i]);
    out << '\n';
  }
  finish(out, path);
}

void write_events_csv(const std::filesystem::path& path, const std::vector<DetectionEvent>& events,
                      const std::string& provenance) {
  auto out = open_out(path, provenance);
  out << "onset,duration,score,width,amplitude,tag\n";
  for (const auto& e : events)
    out << format_number(e.onset) << ',' << format_number(e.duration) << ',' << format_number(e.score) << ','
        << e.width << ',' << format_number(e.amplitude) << ',' << e.tag << '\n';
  finish(out, path);
}

std::vector<DetectionEvent> read_events_csv(const std::filesystem::path& path, double dt, double t0) {
  if (!(dt > 0.0)) throw InvalidInput("sample interval must be positive");
  const CsvTable t = read_csv(path);
  const std::size_t co = t.column("onset"), cd = t.column("duration"), cs = t.column("score"), cw = t.column("width");
  const auto has = [&](std::string_view n) { return std::find(t.header.begin(), t.header.end(), n) != t.header.end(); };
  std::vector<DetectionEvent> events;
  for (const auto& row : t.rows) {
    DetectionEvent e;
    e.onset = parse_number(row[co]);
    e.duration = parse_number(row[cd]);
    e.score = parse_number(row[cs]);
    e.width = static_cast<int>(parse_number(row[cw]));
    if (has("amplitude")) e.amplitude = parse_number(row[t.column("amplitude")]);
    if (has("tag")) e.tag = row[t.column("tag")];
    e.start = to_samples(e.onset - t0, dt);
    e.length = to_samples(e.duration, dt);
    events.push_back(std::move(e));
  }
  return events;
}

LabelSeq read_labels_csv(const std::filesystem::path& path, std::size_t length) {
  const CsvTable t = read_csv(path);
  const std::size_t ci = t.column("index"), cl = t.column("label");
  LabelSeq labels(length, Label::Unlabeled);
  for (const auto& row : t.rows) {
    const double idx = parse_number(row[ci]);
    if (idx < 0 || idx != std::floor(idx) || idx >= static_cast<double>(length))
      throw InvalidInput("label index out of range: " + row[ci]);
    std::string l = row[cl];
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "dock") labels[static_cast<std::size_t>(idx)] = Label::Dock;
    else if (l == "nodock") labels[static_cast<std::size_t>(idx)] = Label::NoDock;
    else throw InvalidInput("unknown label '" + row[cl] + "'");
  }
  return labels;
}

void write_labels_csv(const std::filesystem::path& path, const LabelSeq& labels, const std::string& provenance) {
  auto out = open_out(path, provenance);
  out << "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != Label::Unlabeled) out << i << ',' << label_name(labels[i]) << '\n';
  finish(out, path);
}

ResponseTable read_table_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2) throw InvalidInput("response table needs at least one agent column");
  ResponseTable table;
  table.agents.assign(t.header.begin() + 1, t.header.end());
  for (const auto& row : t.rows) {
    table.modifiers.push_back(row[0]);
    std::vector<double> p;
    for (std::size_t c = 1; c < row.size(); ++c) p.push_back(parse_number(row[c]));
    table.p.push_back(std::move(p));
  }
  validate(table);
  return table;
}

void write_table_csv(const std::filesystem::path& path, const ResponseTable& table, const std::string& provenance) {
  validate(table);
  auto out = open_out(path, provenance);
  out << "modifier";
  for (const auto& a : table.agents) out << ',' << a;
  out << '\n';
  for (std::size_t m = 0; m < table.modifiers.size(); ++m) {
    out << table.modifiers[m];
    for (double v : table.p[m]) out << ',' << format_number(v);
    out << '\n';
  }
  finish(out, path);
}

Evidence read_evidence_csv(const std::filesystem::path& path, const ResponseTable& table) {
  const CsvTable t = read_csv(path);
  const std::size_t cm = t.column("modifier"), co = t.column("outcome");
  const bool soft = std::find(t.header.begin(), t.header.end(), "strength") != t.header.end();
  std::vector<std::string> mods;
  std::vector<Outcome> outcomes;
  std::map<std::size_t, std::pair<double, int>> strength;
  for (const auto& row : t.rows) {
    std::string o = row[co];
    std::transform(o.begin(), o.end(), o.begin(), [](unsigned char c) { return std::tolower(c); });
    Outcome out;
    if (o == "1" || o == "yes" || o == "detected") out = Outcome::Detected;
    else if (o == "0" || o == "no" || o == "not_detected") out = Outcome::NotDetected;
    else throw InvalidInput("unknown outcome '" + row[co] + "'");
    mods.push_back(row[cm]);
    outcomes.push_back(out);
    if (soft) {
      auto& acc = strength[table.modifier_index(row[cm])];
      acc.first += parse_number(row[t.column("strength")]);
      acc.second += 1;
    }
  }
  std::vector<bool> covered(table.modifiers.size(), false);
  for (const auto& m : mods) covered[table.modifier_index(m)] = true;
  if (std::find(covered.begin(), covered.end(), false) != covered.end())
    throw InvalidInput("evidence must give an outcome for every modifier row");
  Evidence ev = collapse_replicates(table, mods, outcomes);
  if (soft)
    for (auto& [m, acc] : strength) ev.strength[m] = acc.first / acc.second;
  return ev;
}

void write_evidence_csv(const std::filesystem::path& path, const ResponseTable& table, const Evidence& evidence,
                        const std::string& provenance) {
  if (evidence.outcomes.size() != table.modifiers.size()) throw InvalidInput("evidence needs one outcome per row");
  const bool soft = evidence.strength.size() == evidence.outcomes.size();
  auto out = open_out(path, provenance);
  out << "modifier,outcome" << (soft ? ",strength" : "") << '\n';
  for (std::size_t m = 0; m < table.modifiers.size(); ++m) {
    out << table.modifiers[m] << ',' << (evidence.outcomes[m] == Outcome::Detected ? 1 : 0);
    if (soft) out << ',' << format_number(evidence.strength[m]);
    out << '\n';
  }
  finish(out, path);
}

std::vector<double> read_prior_csv(const std::filesystem::path& path, const ResponseTable& table) {
  const CsvTable t = read_csv(path);
  const std::size_t ca = t.column("agent"), cp = t.column("prior");
  std::vector<double> prior(table.agents.size(), 0.0);
  std::vector<bool> seen(table.agents.size(), false);
  for (const auto& row : t.rows) {
    const std::size_t a = table.agent_index(row[ca]);
    prior[a] = parse_number(row[cp]);
    if (!(prior[a] >= 0.0)) throw InvalidInput("prior probabilities must be non-negative");
    seen[a] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw InvalidInput("prior must list every agent");
  double z = 0.0;
  for (double v : prior) z += v;
  if (!(z > 0.0)) throw InvalidInput("prior has no mass");
  for (auto& v : prior) v /= z;
  return prior;
}

void write_posterior_csv(const std::filesystem::path& path, const Posterior& posterior, const std::string& provenance) {
  auto out = open_out(path, provenance);
  out << "agent,posterior\n";
  for (std::size_t a = 0; a < posterior.agents.size(); ++a)
    out << posterior.agents[a] << ',' << format_number(posterior.prob[a]) << '\n';
  finish(out, path);
}

// ---------------------------------------------------------------------------------------------
// Model file

void write_model(std::ostream& out, const HsmmModel& model) {
  validate(model);
  static constexpr const char* kNames[] = {"nodock", "dock"};
  out << "nwdetect-hsmm 1\n";
  out << "phases " << model.phases() << '\n';
  out << "symbols " << model.symbols() << '\n';
  out << "initial " << format_number(model.initial[0]) << ' ' << format_number(model.initial[1]) << '\n';
  out << "cuts";
  for (double c : model.cuts) out << ' ' << format_number(c);
  out << '\n';
  for (std::size_t m = 0; m < kMacroStates; ++m) {
    out << "state " << kNames[m] << '\n';
    out << "entry";
    for (double v : model.entry[m]) out << ' ' << format_number(v);
    out << '\n';
    const auto& d = model.duration[m];
    for (std::size_t k = 0; k < d.phases(); ++k)
      out << "phase " << k + 1 << ' ' << format_number(d.stay[k]) << ' ' << format_number(d.advance[k]) << ' '
          << format_number(d.exit[k]) << '\n';
    const auto& em = model.emission[m];
    for (std::size_t c = 0; c < em.components.size(); ++c) {
      out << "component " << format_number(em.weights[c]);
      for (double v : em.components[c]) out << ' ' << format_number(v);
      out << '\n';
    }
  }
}

HsmmModel parse_model(std::istream& in) {
  HsmmModel model;
  std::size_t phases = 0, symbols = 0;
  int state = -1;
  bool magic = false;
  for (std::string line; std::getline(in, line);) {
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto w = words(s);
    const std::string& key = w[0];
    auto nums = [&](std::size_t from) {
      std::vector<double> v;
      for (std::size_t i = from; i < w.size(); ++i) v.push_back(parse_number(w[i]));
      return v;
    };
    if (key == "nwdetect-hsmm") {
      if (w.size() != 2 || w[1] != "1") throw InvalidInput("unsupported model file version");
      magic = true;
    } else if (!magic) {
      throw InvalidInput("model file must start with 'nwdetect-hsmm 1'");
    } else if (key == "phases" && w.size() == 2) {
      phases = static_cast<std::size_t>(parse_number(w[1]));
    } else if (key == "symbols" && w.size() == 2) {
      symbols = static_cast<std::size_t>(parse_number(w[1]));
    } else if (key == "initial" && w.size() == 3) {
      model.initial = {parse_number(w[1]), parse_number(w[2])};
    } else if (key == "cuts") {
      model.cuts = nums(1);
    } else if (key == "state" && w.size() == 2) {
      if (w[1] == "nodock") state = 0;
      else if (w[1] == "dock") state = 1;
      else throw InvalidInput("unknown macro state '" + w[1] + "'");
    } else if (state < 0) {
      throw InvalidInput("model line before any 'state' block: " + s);
    } else if (key == "entry") {
      model.entry[static_cast<std::size_t>(state)] = nums(1);
    } else if (key == "phase" && w.size() == 5) {
      auto& d = model.duration[static_cast<std::size_t>(state)];
      if (static_cast<std::size_t>(parse_number(w[1])) != d.phases() + 1) throw InvalidInput("phases out of order");
      d.stay.push_back(parse_number(w[2]));
      d.advance.push_back(parse_number(w[3]));
      d.exit.push_back(parse_number(w[4]));
    } else if (key == "component" && w.size() >= 3) {
      auto& em = model.emission[static_cast<std::size_t>(state)];
      em.weights.push_back(parse_number(w[1]));
      em.components.push_back(nums(2));
    } else {
      throw InvalidInput("unrecognized model line: " + s);
    }
  }
  if (!magic) throw InvalidInput("empty model file");
  validate(model);
  if (model.phases() != phases || model.symbols() != symbols)
    throw InvalidInput("model header disagrees with its state blocks");
  return model;
}

void write_model_file(const std::filesystem::path& path, const HsmmModel& model, const std::string& provenance) {
  auto out = open_out(path, provenance);
  write_model(out, model);
  finish(out, path);
}

HsmmModel read_model_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_model(in);
}

// ---------------------------------------------------------------------------------------------
// Scenario file

ArrayScenario parse_scenario(std::istream& in) {
  ArrayScenario sc;
  sc.duration = -1.0;
  WireSpec* wire = nullptr;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const auto w = words(s);
    const std::string& key = w[0];
    auto fail = [&](const std::string& why) -> void {
      throw InvalidInput("scenario line " + std::to_string(lineno) + ": " + why);
    };
    auto num = [&](std::size_t i) {
      if (i >= w.size()) fail("missing value for '" + key + "'");
      return parse_number(w[i]);
    };
    // Splits "<values...> [lags <v...>] [gains <v...>]" style tails.
    auto list_after = [&](const std::string& tag) {
      std::vector<double> v;
      const auto it = std::find(w.begin(), w.end(), tag);
      if (it == w.end()) return v;
      for (auto j = it + 1; j != w.end() && *j != "lags" && *j != "gains"; ++j) v.push_back(parse_number(*j));
      return v;
    };
    auto need_wire = [&]() -> WireSpec& {
      if (!wire) fail("'" + key + "' outside a wire block");
      return *wire;
    };

    if (key == "duration") sc.duration = num(1);
    else if (key == "dt") sc.dt = num(1);
    else if (key == "seed") sc.seed = static_cast<std::uint64_t>(num(1));
    else if (key == "baseline") sc.config.baseline = num(1);
    else if (key == "spike_max_duration") sc.config.spike_max_duration = num(1);
    else if (key == "spike_shape") {
      if (w.size() != 2) fail("spike_shape takes one word");
      if (w[1] == "rectangular") sc.config.spike_shape = SpikeShape::Rectangular;
      else if (w[1] == "triangular") sc.config.spike_shape = SpikeShape::Triangular;
      else fail("unknown spike shape '" + w[1] + "'");
    } else if (key == "shared_noise") {
      sc.shared_noise.sigma = num(1);
      sc.shared_noise.lags = list_after("lags");
      sc.shared_noise.gains = list_after("gains");
    } else if (key == "common_spike") {
      sc.common_spikes.push_back({num(1), num(2), list_after("lags")});
    } else if (key == "wire") {
      if (w.size() != 2) fail("wire takes a modifier id");
      sc.wires.push_back(WireSpec{w[1], {}, {}});
      wire = &sc.wires.back();
    } else if (key == "noise") {
      need_wire().noise.white_sigma = num(1);
    } else if (key == "wire_seed") {
      need_wire().noise.seed = static_cast<std::uint64_t>(num(1));
    } else if (key == "trend") {
      auto& wr = need_wire();
      if (w.size() < 2) fail("trend needs a kind");
      if (w[1] == "none") wr.noise.trend = trend::None{};
      else if (w[1] == "linear") wr.noise.trend = trend::Linear{num(2)};
      else if (w[1] == "quadratic") wr.noise.trend = trend::Quadratic{num(2), num(3)};
      else if (w[1] == "steps") {
        trend::PiecewiseStep p;
        if ((w.size() - 2) % 2 != 0 || w.size() < 4) fail("steps needs time/level pairs");
        for (std::size_t i = 2; i + 1 < w.size(); i += 2) {
          p.times.push_back(num(i));
          p.levels.push_back(num(i + 1));
        }
        wr.noise.trend = p;
      } else fail("unknown trend '" + w[1] + "'");
    } else if (key == "binding" || key == "spike") {
      if (w.size() != 4) fail(key + " takes onset, duration, amplitude");
      need_wire().events.push_back(
          {key == "binding" ? EventKind::SpecificBinding : EventKind::TransientSpike, num(1), num(2), num(3)});
    } else {
      fail("unknown keyword '" + key + "'");
    }
  }
  if (!(sc.duration > 0.0)) throw InvalidInput("scenario needs a positive duration");
  if (sc.wires.empty()) throw InvalidInput("scenario defines no wires");
  return sc;
}

ArrayScenario read_scenario_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_scenario(in);
}

// ---------------------------------------------------------------------------------------------

void emit_plot_data(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                    const std::string& provenance, const std::string& index_name) {
  if (series.empty()) throw InvalidInput("no series to plot");
  const bool explicit_x = std::any_of(series.begin(), series.end(), [](const PlotSeries& s) { return !s.x.empty(); });
  std::size_t rows = 0;
  for (const auto& s : series) {
    if (explicit_x && s.x.size() != s.y.size()) throw InvalidInput("series '" + s.name + "' x and y lengths differ");
    if (!explicit_x && s.y.size() != series.front().y.size()) throw InvalidInput("series lengths differ");
    rows = std::max(rows, s.y.size());
  }

  auto out = open_out(path, provenance);
  if (!explicit_x) out << index_name;
  bool first = explicit_x;
  for (const auto& s : series) {
    if (!first) out << ',';
    first = false;
    if (explicit_x) out << (s.x_name.empty() ? s.name + "_x" : s.x_name) << ',';
    out << s.name;
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    if (!explicit_x) out << r;
    first = explicit_x;
    for (const auto& s : series) {
      if (!first) out << ',';
      first = false;
      if (explicit_x) {
        if (r < s.y.size()) out << format_number(s.x[r]) << ',' << format_number(s.y[r]);
        else out << ',';
      } else {
        out << format_number(s.y[r]);
      }
    }
    out << '\n';
  }
  finish(out, path);
}

} // namespace nwd
