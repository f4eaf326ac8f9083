#include "nwd/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "nwd/conditioning.hpp"
#include "nwd/hsmm.hpp"
#include "nwd/io.hpp"
#include "nwd/matched_filter.hpp"
#include "nwd/threshold.hpp"
#include "nwd/xcorr.hpp"

namespace nwd {

namespace {

class Params {
public:
  Params(const StageSpec& stage) : stage_(stage) {}

  std::string str(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    const auto it = stage_.params.find(key);
    return it == stage_.params.end() ? fallback : it->second;
  }
  double num(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = stage_.params.find(key);
    return it == stage_.params.end() ? fallback : parse_number(it->second);
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    used_.insert(key);
    const auto it = stage_.params.find(key);
    if (it == stage_.params.end()) return fallback;
    const double v = parse_number(it->second);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw InvalidInput("stage " + stage_.name + ": " + key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  void finish() const {
    for (const auto& [k, v] : stage_.params)
      if (!used_.count(k)) throw InvalidInput("stage " + stage_.name + ": unknown parameter '" + k + "'");
  }

private:
  const StageSpec& stage_;
  std::set<std::string> used_;
};

DetrendMethod detrend_from(Params& p) {
  const std::string method = p.str("method", "median");
  const double window = p.num("window", 200.0);
  if (method == "median") return detrend_method::MovingMedian{window};
  if (method == "average") return detrend_method::MovingAverage{window};
  if (method == "histogram") return detrend_method::HistogramMode{window, p.num("bin-width", 2.0)};
  if (method == "poly") return detrend_method::GlobalPolyFit{static_cast<int>(p.count("degree", 2))};
  throw InvalidInput("unknown detrend method '" + method + "'");
}

std::vector<int> parse_widths(const std::string& text) {
  std::vector<int> widths;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) widths.push_back(static_cast<int>(parse_number(item)));
  if (widths.empty()) throw InvalidInput("empty width list");
  return widths;
}

struct State {
  Trace trace;
  std::vector<double> scores;              // last matched-filter output
  std::vector<DetectionEvent> events;      // last detector output
  LabelSeq labels;                         // training labels
  std::optional<HsmmModel> model;
  std::vector<int> symbols;
};

std::vector<double> label_series(const LabelSeq& labels) {
  std::vector<double> out;
  for (Label l : labels) out.push_back(l == Label::Dock ? 1.0 : l == Label::NoDock ? 0.0 : -1.0);
  return out;
}

} // namespace

const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = {"detrend",   "whiten",           "lowpass",    "matchfilter",
                                                 "threshold", "threshold-labels", "hsmm-train", "hsmm-decode",
                                                 "noise-only"};
  return names;
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const std::string& canonical_config, std::optional<std::uint64_t> seed) {
  return "nwdetect config=" + config_hash(canonical_config) + " seed=" + (seed ? std::to_string(*seed) : "none");
}

PipelineConfig parse_pipeline_config(std::istream& in, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::ostringstream canon;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto hash = line.find('#');
    std::istringstream ss(hash == std::string::npos ? line : line.substr(0, hash));
    std::vector<std::string> w;
    for (std::string t; ss >> t;) w.push_back(t);
    if (w.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw InvalidInput("pipeline config line " + std::to_string(lineno) + ": " + why);
    };
    for (std::size_t i = 0; i < w.size(); ++i) canon << (i ? " " : "") << w[i];
    canon << '\n';

    if (w[0] == "seed" && w.size() == 2) {
      cfg.seed = static_cast<std::uint64_t>(parse_number(w[1]));
    } else if (w[0] == "input" && w.size() == 2) {
      cfg.input = base_dir / w[1];
    } else if (w[0] == "simulate" && (w.size() == 2 || (w.size() == 4 && w[2] == "wire"))) {
      cfg.simulate = base_dir / w[1];
      if (w.size() == 4) cfg.wire = static_cast<std::size_t>(parse_number(w[3]));
    } else if (w[0] == "stage" && w.size() >= 2) {
      const auto& names = pipeline_stage_names();
      if (std::find(names.begin(), names.end(), w[1]) == names.end()) fail("unknown stage '" + w[1] + "'");
      StageSpec st{w[1], {}};
      for (std::size_t i = 2; i < w.size(); ++i) {
        const auto eq = w[i].find('=');
        if (eq == std::string::npos || eq == 0) fail("expected key=value, got '" + w[i] + "'");
        st.params[w[i].substr(0, eq)] = w[i].substr(eq + 1);
      }
      cfg.stages.push_back(std::move(st));
    } else {
      fail("unrecognized line");
    }
  }
  if (cfg.input.empty() == cfg.simulate.empty()) throw InvalidInput("pipeline config needs exactly one of input/simulate");
  if (!cfg.simulate.empty() && !cfg.seed) throw InvalidInput("simulation input requires a seed");
  for (const auto& st : cfg.stages)
    if (st.name == "hsmm-train" && !cfg.seed) throw InvalidInput("hsmm-train requires a seed");
  cfg.canonical = canon.str();
  return cfg;
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path.string() + "'");
  return parse_pipeline_config(in, path.parent_path());
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult result;
  const std::string prov = provenance_line(config.canonical, config.seed);
  std::filesystem::create_directories(config.out_dir);
  auto out_path = [&](const std::string& name) {
    const auto p = config.out_dir / name;
    result.files.push_back(p);
    return p;
  };

  State st;
  if (!config.simulate.empty()) {
    ArrayScenario sc = read_scenario_file(config.simulate);
    sc.seed = derive_seed(*config.seed, "simulate");
    const auto traces = synthesize_array(sc);
    if (config.wire >= traces.size()) throw InvalidInput("wire index beyond scenario");
    st.trace = traces[config.wire];
    write_trace_csv(out_path("input.csv"), st.trace, prov);
  } else {
    st.trace = read_trace_csv(config.input);
  }

  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const StageSpec& stage = config.stages[i];
    Params p(stage);
    char prefix[8];
    std::snprintf(prefix, sizeof prefix, "%02zu_", i + 1);
    const std::string tag = prefix + stage.name;

    if (stage.name == "detrend") {
      const DetrendMethod method = detrend_from(p);
      p.finish();
      DetrendResult d = detrend(st.trace, method);
      st.trace = std::move(d.detrended);
      write_trace_csv(out_path(tag + ".csv"), st.trace, prov);
    } else if (stage.name == "whiten") {
      p.finish();
      st.trace = whiten(st.trace);
      write_trace_csv(out_path(tag + ".csv"), st.trace, prov);
    } else if (stage.name == "lowpass") {
      const double cutoff = p.num("cutoff", 0.05);
      p.finish();
      st.trace = low_pass(st.trace, cutoff);
      write_trace_csv(out_path(tag + ".csv"), st.trace, prov);
    } else if (stage.name == "noise-only") {
      const DetrendMethod method = detrend_from(p);
      const double cutoff = p.num("cutoff", 0.05);
      p.finish();
      st.trace = noise_only(st.trace, method, cutoff);
      write_trace_csv(out_path(tag + ".csv"), st.trace, prov);
    } else if (stage.name == "matchfilter") {
      const auto widths = parse_widths(p.str("width", "20"));
      const double amp = p.num("amp", -20.0);
      const std::size_t n = p.count("n", 1024);
      const double threshold = p.num("threshold", 4.0);
      const std::size_t min_sep = p.count("min-sep", 0);
      p.finish();
      st.events = matched_filter_bank(st.trace, widths, amp, n, threshold, min_sep);
      st.scores = matched_filter(st.trace, BoxcarFilterSpec{amp, widths.front(), n}).scores;
      write_events_csv(out_path(tag + "_events.csv"), st.events, prov);
      emit_plot_data({{"score", st.scores, {}, {}}}, out_path(tag + "_scores.dat"), prov, "index");
    } else if (stage.name == "threshold") {
      const std::string policy = p.str("policy", "calibrated");
      const double k = p.num("k", 5.0);
      const double cutoff = p.num("cutoff", 0.05);
      const std::string polarity = p.str("polarity", "negative");
      ThresholdPolicy pol;
      if (polarity == "negative") pol.polarity = Polarity::Negative;
      else if (polarity == "positive") pol.polarity = Polarity::Positive;
      else throw InvalidInput("unknown polarity '" + polarity + "'");
      if (policy == "fixed") {
        pol.rule = threshold_rule::Fixed{p.num("level", 15.0)};
      } else if (policy == "calibrated") {
        const std::string cal = p.str("cal", "0:300");
        const auto colon = cal.find(':');
        if (colon == std::string::npos) throw InvalidInput("cal must be first:last seconds");
        const double a = parse_number(cal.substr(0, colon)), b = parse_number(cal.substr(colon + 1));
        pol.rule = threshold_rule::Calibrated{k, to_samples(a, st.trace.dt), to_samples(b, st.trace.dt)};
      } else if (policy == "adaptive") {
        pol.rule = threshold_rule::Adaptive{k, p.num("window", 300.0)};
      } else {
        throw InvalidInput("unknown threshold policy '" + policy + "'");
      }
      ThresholdOptions opts;
      opts.min_duration_s = p.num("min-duration", opts.min_duration_s);
      opts.hysteresis = p.num("hysteresis", opts.hysteresis);
      p.finish();
      st.events = threshold_detect(st.trace, pol, cutoff, opts);
      write_events_csv(out_path(tag + "_events.csv"), st.events, prov);
    } else if (stage.name == "threshold-labels") {
      const std::size_t context = p.count("context", 20);
      const std::size_t guard = p.count("guard", 2);
      p.finish();
      st.labels = labels_from_intervals(st.trace.size(), st.events, context, guard);
      write_labels_csv(out_path(tag + ".csv"), st.labels, prov);
    } else if (stage.name == "hsmm-train") {
      const std::size_t phases = p.count("phases", 2);
      const std::size_t bins = p.count("bins", 8);
      const std::string scheme = p.str("scheme", "quantile");
      const std::size_t components = p.count("components", 1);
      EmOptions em;
      em.max_iters = p.count("iters", em.max_iters);
      em.tol = p.num("tol", em.tol);
      p.finish();
      BinScheme bs;
      if (scheme == "quantile") bs = BinScheme::Quantile;
      else if (scheme == "equal") bs = BinScheme::EqualWidth;
      else throw InvalidInput("unknown bin scheme '" + scheme + "'");
      const Discretization disc = discretize(st.trace, bins, bs);
      st.symbols = disc.symbols;
      if (st.labels.size() != st.trace.size()) st.labels.assign(st.trace.size(), Label::Unlabeled);
      HsmmModel init = initial_model(st.symbols, st.labels, phases, bins, components,
                                     derive_seed(*config.seed, "hsmm-train", i));
      TrainResult tr = em_train(init, st.symbols, st.labels, em);
      tr.model.cuts = disc.cuts;
      st.model = tr.model;
      write_model_file(out_path(tag + "_model.txt"), *st.model, prov);
      emit_plot_data({{"loglik", tr.log_likelihood, {}, {}}}, out_path(tag + "_loglik.dat"), prov, "iteration");
    } else if (stage.name == "hsmm-decode") {
      DecodeOptions opts;
      opts.min_dock = p.count("min-dock", opts.min_dock);
      opts.max_dock = p.count("max-dock", opts.max_dock);
      const std::string model_path = p.str("model", "");
      p.finish();
      if (!model_path.empty()) st.model = read_model_file(model_path);
      if (!st.model) throw InvalidInput("hsmm-decode needs a trained model or model=<file>");
      opts.dt = st.trace.dt;
      opts.t0 = st.trace.t0;
      st.symbols = apply_cuts(st.trace.samples, st.model->cuts);
      const Decoded dec = viterbi_decode(*st.model, st.symbols, opts);
      st.events = dec.events;
      write_labels_csv(out_path(tag + "_labels.csv"), dec.labels, prov);
      write_events_csv(out_path("events.csv"), dec.events, prov);

      std::vector<double> symbols(st.symbols.begin(), st.symbols.end());
      const LabelSeq train = st.labels.size() == st.trace.size() ? st.labels : LabelSeq(st.trace.size(), Label::Unlabeled);
      std::vector<double> scores = st.scores;
      scores.resize(st.trace.size(), 0.0);
      emit_plot_data({{"discretized", symbols, {}, {}},
                      {"predicted", label_series(dec.labels), {}, {}},
                      {"conditioned", st.trace.samples, {}, {}},
                      {"training", label_series(train), {}, {}},
                      {"boxcar", scores, {}, {}}},
                     out_path("hsmm_figure.dat"), prov, "index");
    }
  }

  write_trace_csv(out_path("output.csv"), st.trace, prov);
  return result;
}

} // namespace nwd
