// nwdetect: batch command-line front end for the nanowire event-detection library.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nwd/bayes.hpp"
#include "nwd/conditioning.hpp"
#include "nwd/hsmm.hpp"
#include "nwd/io.hpp"
#include "nwd/matched_filter.hpp"
#include "nwd/pipeline.hpp"
#include "nwd/threshold.hpp"
#include "nwd/trace.hpp"
#include "nwd/xcorr.hpp"

namespace fs = std::filesystem;
using namespace nwd;

namespace {

enum ExitCode { kOk = 0, kBadInput = 2, kNumeric = 3 };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string config;
};

// Output names are confined to the output directory.
fs::path output_path(const Globals& g, const std::string& name) {
  const fs::path rel(name);
  if (rel.empty() || rel.is_absolute() || rel.has_root_name())
    throw InvalidInput("output name must be relative to --out-dir: '" + name + "'");
  for (const auto& part : rel)
    if (part == "..") throw InvalidInput("output name may not leave --out-dir: '" + name + "'");
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / rel;
}

std::string provenance(const Globals& g, const std::vector<std::string>& argv) {
  std::ostringstream cmd;
  for (std::size_t i = 1; i < argv.size(); ++i) cmd << (i > 1 ? " " : "") << argv[i];
  return provenance_line(cmd.str(), g.seed);
}

std::uint64_t require_seed(const Globals& g, const char* what) {
  if (!g.seed) throw InvalidInput(std::string(what) + " requires --seed");
  return *g.seed;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

DetrendMethod make_method(const std::string& method, double window, double bin_width, int degree) {
  if (method == "median") return detrend_method::MovingMedian{window};
  if (method == "average") return detrend_method::MovingAverage{window};
  if (method == "histogram") return detrend_method::HistogramMode{window, bin_width};
  if (method == "poly") return detrend_method::GlobalPolyFit{degree};
  throw InvalidInput("unknown detrend method '" + method + "'");
}

std::size_t wire_index(const std::vector<std::string>& names, const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidInput("unknown wire '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viral binding event detection for nanowire conductance traces"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Global seed for every stochastic stage");
  app.add_option("--out-dir", g.out_dir, "Directory receiving every output file");
  app.add_option("--config", g.config, "Pipeline configuration file");

  std::vector<std::string> args(argv, argv + argc);
  std::function<void()> action;

  // simulate
  std::string scenario_path;
  std::string out_simulate, out_detrend, out_whiten, out_lowpass, out_matchfilter, out_threshold;
  std::string out_bayes, out_hsmm_train, out_hsmm_decode, out_xcorr, out_denoise;
  auto* sim = app.add_subcommand("simulate", "Synthesize ground-truth traces from a scenario file");
  sim->add_option("--scenario", scenario_path, "Scenario file")->required();
  sim->add_option("-o,--output", out_simulate, "Multi-wire CSV name")->default_val("traces.csv");
  sim->callback([&] {
    action = [&] {
      ArrayScenario sc = read_scenario_file(scenario_path);
      if (g.seed) sc.seed = derive_seed(*g.seed, "simulate");
      const auto traces = synthesize_array(sc);
      std::vector<std::string> names;
      for (std::size_t i = 0; i < traces.size(); ++i) names.push_back("w" + std::to_string(i + 1));
      const std::string prov = provenance(g, args);
      write_multi_trace_csv(output_path(g, out_simulate), traces, names, prov);
      std::ofstream wires(output_path(g, "wires.csv"));
      wires << "# " << prov << "\nwire,modifier\n";
      for (std::size_t i = 0; i < traces.size(); ++i) wires << names[i] << ',' << sc.wires[i].modifier << '\n';
    };
  });

  // detrend / whiten / lowpass
  std::string input;
  std::string method = "histogram", noise_method = "median";
  double window = 200.0, bin_width = 2.0, cutoff = 0.05;
  int degree = 2;
  auto* det = app.add_subcommand("detrend", "Remove the slowly varying baseline");
  det->add_option("--input", input, "Trace CSV")->required();
  det->add_option("--method", method, "histogram | median | average | poly")->default_val("histogram");
  det->add_option("--window", window, "Window length in seconds")->default_val(200.0);
  det->add_option("--bin-width", bin_width, "Histogram bin width in nS")->default_val(2.0);
  det->add_option("--degree", degree, "Polynomial degree for --method poly")->default_val(2);
  det->add_option("-o,--output", out_detrend, "Detrended trace name")->default_val("detrended.csv");
  det->callback([&] {
    action = [&] {
      const DetrendResult r = detrend(read_trace_csv(input), make_method(method, window, bin_width, degree));
      const std::string prov = provenance(g, args);
      write_trace_csv(output_path(g, out_detrend), r.detrended, prov);
      Trace trend = r.detrended;
      trend.samples = r.trend;
      write_trace_csv(output_path(g, "trend.csv"), trend, prov);
    };
  });

  auto* wht = app.add_subcommand("whiten", "Subtract the mean and divide by the standard deviation");
  wht->add_option("--input", input, "Trace CSV")->required();
  wht->add_option("-o,--output", out_whiten, "Output name")->default_val("whitened.csv");
  wht->callback([&] {
    action = [&] { write_trace_csv(output_path(g, out_whiten), whiten(read_trace_csv(input)), provenance(g, args)); };
  });

  auto* lp = app.add_subcommand("lowpass", "Raised-cosine low-pass filter");
  lp->add_option("--input", input, "Trace CSV")->required();
  lp->add_option("--cutoff", cutoff, "Cutoff frequency in Hz")->default_val(0.05);
  lp->add_option("-o,--output", out_lowpass, "Output name")->default_val("lowpass.csv");
  lp->callback([&] {
    action = [&] {
      write_trace_csv(output_path(g, out_lowpass), low_pass(read_trace_csv(input), cutoff), provenance(g, args));
    };
  });

  // matchfilter
  std::string widths = "20";
  double amp = -20.0, threshold_sigma = 4.0;
  std::size_t fft_n = 1024, min_sep = 0;
  auto* mf = app.add_subcommand("matchfilter", "Boxcar matched filter and peak detection");
  mf->add_option("--input", input, "Trace CSV")->required();
  mf->add_option("--width", widths, "Boxcar width(s) in samples, comma separated")->default_val("20");
  mf->add_option("--amp", amp, "Boxcar amplitude in nS")->default_val(-20.0);
  mf->add_option("--n", fft_n, "Transform length (power of two)")->default_val(1024);
  mf->add_option("--threshold", threshold_sigma, "Peak threshold in output standard deviations")->default_val(4.0);
  mf->add_option("--min-sep", min_sep, "Peak separation in samples (0: filter width)")->default_val(0);
  mf->add_option("-o,--output", out_matchfilter, "Detections CSV name")->default_val("detections.csv");
  mf->callback([&] {
    action = [&] {
      const Trace trace = read_trace_csv(input);
      std::vector<int> ws;
      for (const auto& w : split_list(widths)) ws.push_back(static_cast<int>(parse_number(w)));
      const auto events = matched_filter_bank(trace, ws, amp, fft_n, threshold_sigma, min_sep);
      const std::string prov = provenance(g, args);
      write_events_csv(output_path(g, out_matchfilter), events, prov);
      const FilterOutput out = matched_filter(trace, BoxcarFilterSpec{amp, ws.front(), fft_n});
      emit_plot_data({{"score", out.scores, {}, {}}}, output_path(g, "scores.dat"), prov, "index");
    };
  });

  // threshold
  std::string policy = "calibrated", cal = "0:300", polarity = "negative";
  double k_sigma = 5.0, level = 15.0, adapt_window = 300.0, min_duration = 5.0, hysteresis = 0.5;
  auto* th = app.add_subcommand("threshold", "Low-pass + threshold detection");
  th->add_option("--input", input, "Trace CSV")->required();
  th->add_option("--policy", policy, "fixed | calibrated | adaptive")->default_val("calibrated");
  th->add_option("--k", k_sigma, "Threshold in noise standard deviations")->default_val(5.0);
  th->add_option("--level", level, "Fixed threshold magnitude in nS")->default_val(15.0);
  th->add_option("--cal", cal, "Calibration range first:last in seconds")->default_val("0:300");
  th->add_option("--window", adapt_window, "Adaptive window in seconds")->default_val(300.0);
  th->add_option("--cutoff", cutoff, "Low-pass cutoff in Hz")->default_val(0.05);
  th->add_option("--polarity", polarity, "negative | positive")->default_val("negative");
  th->add_option("--min-duration", min_duration, "Shortest reported event in seconds")->default_val(5.0);
  th->add_option("--hysteresis", hysteresis, "Release fraction of the threshold distance")->default_val(0.5);
  th->add_option("-o,--output", out_threshold, "Detections CSV name")->default_val("detections.csv");
  th->callback([&] {
    action = [&] {
      const Trace trace = read_trace_csv(input);
      ThresholdPolicy pol;
      if (polarity == "negative") pol.polarity = Polarity::Negative;
      else if (polarity == "positive") pol.polarity = Polarity::Positive;
      else throw InvalidInput("unknown polarity '" + polarity + "'");
      if (policy == "fixed") {
        pol.rule = threshold_rule::Fixed{level};
      } else if (policy == "calibrated") {
        const auto colon = cal.find(':');
        if (colon == std::string::npos) throw InvalidInput("--cal must be first:last");
        pol.rule = threshold_rule::Calibrated{k_sigma, to_samples(parse_number(cal.substr(0, colon)), trace.dt),
                                              to_samples(parse_number(cal.substr(colon + 1)), trace.dt)};
      } else if (policy == "adaptive") {
        pol.rule = threshold_rule::Adaptive{k_sigma, adapt_window};
      } else {
        throw InvalidInput("unknown policy '" + policy + "'");
      }
      const auto events = threshold_detect(trace, pol, cutoff, {hysteresis, min_duration});
      write_events_csv(output_path(g, out_threshold), events, provenance(g, args));
    };
  });

  // bayes
  std::string table_path = "default", evidence_path, prior_path, agents;
  double evidence_noise = 0.0, mixture_ratio = 3.0;
  bool soft = false;
  auto* by = app.add_subcommand("bayes", "Naive Bayes posterior over agents from array evidence");
  by->add_option("--table", table_path, "Response table CSV, or 'default'")->default_val("default");
  by->add_option("--evidence", evidence_path, "Evidence CSV");
  by->add_option("--prior", prior_path, "Prior CSV (default uniform)");
  by->add_option("--simulate", agents, "Simulate evidence for these agents (comma separated)");
  by->add_option("--noise", evidence_noise, "Response noise for --simulate")->default_val(0.0);
  by->add_option("--mixture-ratio", mixture_ratio, "Flag mixtures when top1/top2 <= ratio")->default_val(3.0);
  by->add_flag("--soft", soft, "Use soft response strengths");
  by->add_option("-o,--output", out_bayes, "Posterior CSV name")->default_val("posterior.csv");
  by->callback([&] {
    action = [&] {
      const ResponseTable table = table_path == "default" ? default_table() : read_table_csv(table_path);
      const std::string prov = provenance(g, args);
      Evidence ev;
      if (!agents.empty()) {
        if (!evidence_path.empty()) throw InvalidInput("use either --evidence or --simulate");
        ev = simulate_evidence(table, split_list(agents), evidence_noise, derive_seed(require_seed(g, "--simulate"), "evidence"));
        write_evidence_csv(output_path(g, "evidence.csv"), table, ev, prov);
      } else if (!evidence_path.empty()) {
        ev = read_evidence_csv(evidence_path, table);
      } else {
        throw InvalidInput("bayes needs --evidence or --simulate");
      }
      std::vector<double> prior = prior_path.empty()
                                      ? std::vector<double>(table.agents.size(), 1.0 / table.agents.size())
                                      : read_prior_csv(prior_path, table);
      PosteriorOptions opts;
      opts.soft = soft;
      opts.mixture_ratio = mixture_ratio;
      const Posterior post = posterior(table, ev, prior, opts);
      write_posterior_csv(output_path(g, out_bayes), post, prov);
      emit_plot_data({{"posterior", post.prob, {}, {}}}, output_path(g, "posterior_plot.dat"), prov, "agent_index");
      const auto top = post.argmax();
      std::cout << "argmax " << post.agents[top] << ' ' << format_number(post.prob[top])
                << (post.mixture ? " mixture" : "") << '\n';
    };
  });

  // hsmm-train / hsmm-decode
  std::string labels_path, model_path, scheme = "quantile";
  std::size_t phases = 2, bins = 8, iters = 100, components = 1, min_dock = 3, max_dock = 0;
  double tol = 1e-6;
  auto* ht = app.add_subcommand("hsmm-train", "Semi-supervised EM for the docking HSMM");
  ht->add_option("--input", input, "Conditioned (detrended, whitened) trace CSV")->required();
  ht->add_option("--labels", labels_path, "Labels CSV index,label (dock|nodock)");
  ht->add_option("--phases", phases, "Coxian phases per macro state")->default_val(2);
  ht->add_option("--bins", bins, "Discretization bins")->default_val(8);
  ht->add_option("--scheme", scheme, "quantile | equal")->default_val("quantile");
  ht->add_option("--components", components, "Dock emission mixture components")->default_val(1);
  ht->add_option("--iters", iters, "Maximum EM iterations")->default_val(100);
  ht->add_option("--tol", tol, "Stop when the log-likelihood gain is below this")->default_val(1e-6);
  ht->add_option("-o,--output", out_hsmm_train, "Model file name")->default_val("model.txt");
  ht->callback([&] {
    action = [&] {
      const Trace trace = read_trace_csv(input);
      const Discretization disc =
          discretize(trace, bins, scheme == "equal" ? BinScheme::EqualWidth : BinScheme::Quantile);
      if (scheme != "equal" && scheme != "quantile") throw InvalidInput("unknown scheme '" + scheme + "'");
      if (disc.fell_back) std::cerr << "warning: fewer distinct values than bins; using distinct-value bins\n";
      const LabelSeq labels =
          labels_path.empty() ? LabelSeq(trace.size(), Label::Unlabeled) : read_labels_csv(labels_path, trace.size());
      const HsmmModel init =
          initial_model(disc.symbols, labels, phases, bins, components, derive_seed(require_seed(g, "hsmm-train"), "hsmm-train"));
      EmOptions em;
      em.max_iters = iters;
      em.tol = tol;
      TrainResult tr = em_train(init, disc.symbols, labels, em);
      tr.model.cuts = disc.cuts;
      const std::string prov = provenance(g, args);
      write_model_file(output_path(g, out_hsmm_train), tr.model, prov);
      emit_plot_data({{"loglik", tr.log_likelihood, {}, {}}}, output_path(g, "loglik.dat"), prov, "iteration");
    };
  });

  auto* hd = app.add_subcommand("hsmm-decode", "Viterbi decoding of docking intervals");
  hd->add_option("--model", model_path, "Model file")->required();
  hd->add_option("--input", input, "Conditioned trace CSV")->required();
  hd->add_option("--min-dock", min_dock, "Dock runs shorter than this are tagged spike-like")->default_val(3);
  hd->add_option("--max-dock", max_dock, "Dock runs longer than this are tagged anomalous (0: never)")->default_val(0);
  hd->add_option("-o,--output", out_hsmm_decode, "Labels CSV name")->default_val("decoded_labels.csv");
  hd->callback([&] {
    action = [&] {
      const HsmmModel model = read_model_file(model_path);
      const Trace trace = read_trace_csv(input);
      DecodeOptions opts;
      opts.min_dock = min_dock;
      if (max_dock > 0) opts.max_dock = max_dock;
      opts.dt = trace.dt;
      opts.t0 = trace.t0;
      const Decoded dec = viterbi_decode(model, apply_cuts(trace.samples, model.cuts), opts);
      const std::string prov = provenance(g, args);
      write_labels_csv(output_path(g, out_hsmm_decode), dec.labels, prov);
      write_events_csv(output_path(g, "events.csv"), dec.events, prov);
    };
  });

  // xcorr / denoise
  int max_lag = 50;
  bool residuals = false;
  std::string target, refs;
  auto* xc = app.add_subcommand("xcorr", "Pairwise lagged correlation of wire noise");
  xc->add_option("--input", input, "Multi-wire CSV")->required();
  xc->add_option("--max-lag", max_lag, "Largest lag in samples")->default_val(50);
  xc->add_flag("--noise-only", residuals, "Correlate noise-only residuals instead of raw traces");
  xc->add_option("--method", noise_method, "Detrend method for --noise-only")->default_val("median");
  xc->add_option("--window", window, "Detrend window in seconds")->default_val(200.0);
  xc->add_option("--bin-width", bin_width, "Histogram bin width in nS")->default_val(2.0);
  xc->add_option("--cutoff", cutoff, "Signal-estimate low-pass cutoff in Hz")->default_val(0.05);
  xc->add_option("-o,--output", out_xcorr, "Summary CSV name")->default_val("xcorr_summary.csv");
  xc->callback([&] {
    action = [&] {
      std::vector<std::string> names;
      std::vector<Trace> traces = read_multi_trace_csv(input, &names);
      if (residuals)
        for (auto& t : traces) t = noise_only(t, make_method(noise_method, window, bin_width, degree), cutoff);
      const std::string prov = provenance(g, args);
      std::ostringstream summary;
      summary << "wire_i,wire_j,peak_lag,peak_value\n";
      for (std::size_t i = 0; i < traces.size(); ++i) {
        for (std::size_t j = i + 1; j < traces.size(); ++j) {
          const XcorrResult r = xcorr(traces[i], traces[j], max_lag);
          std::vector<double> lags(r.lags.begin(), r.lags.end());
          emit_plot_data({{"value", r.values, lags, "lag"}}, output_path(g, "xcorr_" + names[i] + "_" + names[j] + ".dat"),
                         prov);
          summary << names[i] << ',' << names[j] << ',' << r.peak_lag << ',' << format_number(r.peak_value) << '\n';
        }
      }
      const fs::path p = output_path(g, out_xcorr);
      std::ofstream out(p, std::ios::binary);
      if (!out) throw InvalidInput("cannot write '" + p.string() + "'");
      out << "# " << prov << '\n' << summary.str();
    };
  });

  auto* dn = app.add_subcommand("denoise", "Subtract lag-aligned noise from correlated reference wires");
  dn->add_option("--input", input, "Multi-wire CSV")->required();
  dn->add_option("--target", target, "Wire to clean")->default_val("w1");
  dn->add_option("--refs", refs, "Reference wires, comma separated")->required();
  dn->add_option("--max-lag", max_lag, "Largest lag searched, in samples")->default_val(50);
  dn->add_option("--method", noise_method, "Detrend method for noise-only residuals")->default_val("median");
  dn->add_option("--window", window, "Detrend window in seconds")->default_val(200.0);
  dn->add_option("--bin-width", bin_width, "Histogram bin width in nS")->default_val(2.0);
  dn->add_option("--cutoff", cutoff, "Signal-estimate low-pass cutoff in Hz")->default_val(0.05);
  dn->add_option("-o,--output", out_denoise, "Cleaned trace name")->default_val("denoised.csv");
  dn->callback([&] {
    action = [&] {
      std::vector<std::string> names;
      const std::vector<Trace> traces = read_multi_trace_csv(input, &names);
      const DetrendMethod dm = make_method(noise_method, window, bin_width, degree);
      const std::size_t ti = wire_index(names, target);
      const Trace target_noise = noise_only(traces[ti], dm, cutoff);
      std::vector<Trace> ref_noise;
      std::vector<int> lags;
      for (const auto& r : split_list(refs)) {
        ref_noise.push_back(noise_only(traces[wire_index(names, r)], dm, cutoff));
        lags.push_back(xcorr(target_noise, ref_noise.back(), max_lag).peak_lag);
      }
      write_trace_csv(output_path(g, out_denoise), ensemble_subtract(traces[ti], ref_noise, lags), provenance(g, args));
    };
  });

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "Run a configured multi-stage pipeline");
  pl->callback([&] {
    action = [&] {
      if (g.config.empty()) throw InvalidInput("pipeline requires --config");
      PipelineConfig cfg = read_pipeline_config(g.config);
      if (g.seed) cfg.seed = g.seed;
      cfg.out_dir = g.out_dir;
      run_pipeline(cfg);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error code=2 kind=usage message=\"" << e.what() << "\"\n";
    return kBadInput;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (action) action();
  } catch (const NumericError& e) {
    std::cerr << "error code=3 kind=numeric message=\"" << e.what() << "\"\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error code=2 kind=bad_input message=\"" << e.what() << "\"\n";
    return kBadInput;
  }
  return kOk;
}
