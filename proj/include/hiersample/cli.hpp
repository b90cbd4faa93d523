#pragma once

// Command-line front end. Needs OpenSSL (libcrypto) for manifest hashes.

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hiersample/analysis.hpp"
#include "hiersample/augment.hpp"
#include "hiersample/dataset_io.hpp"
#include "hiersample/errors.hpp"
#include "hiersample/hierarchy.hpp"
#include "hiersample/masking.hpp"
#include "hiersample/oracle_experiment.hpp"
#include "hiersample/parallel.hpp"
#include "hiersample/sampler.hpp"
#include "hiersample/similarity.hpp"

#ifndef HIERSAMPLE_VERSION
#define HIERSAMPLE_VERSION "0.1.0"
#endif

namespace hiersample::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kThreadsEnv = "HIER_SAMPLER_THREADS";

// ---------------------------------------------------------------------------
// Files, hashes, manifests

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  return to_hex(std::span<const std::uint8_t>(digest, len));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Directories hash the sorted (name, length, bytes) sequence of their regular files.
inline std::string hash_input(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) return sha256_hex(read_file(path));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    auto bytes = read_file(f);
    all += f.filename().string();
    all += '\0';
    all += std::to_string(bytes.size());
    all += '\0';
    all += bytes;
  }
  return sha256_hex(all);
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    if (!os) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place at " + path.string());
  }
}

inline std::filesystem::path manifest_path(const std::filesystem::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

struct RunRecord {
  std::string subcommand;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::pair<std::filesystem::path, std::string>> outputs;  // path, contents
};

/// Writes every output, then one manifest per output naming the resolved config,
/// its digest, and the hashes of all inputs and outputs. Nothing time-dependent.
inline void commit(const RunRecord& run) {
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const auto& p : run.inputs) inputs.push_back({{"path", p.string()}, {"sha256", hash_input(p)}});
  nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
  for (const auto& [p, bytes] : run.outputs) outputs.push_back({{"path", p.string()}, {"sha256", sha256_hex(bytes)}});
  nlohmann::ordered_json m;
  m["tool"] = "hiersample";
  m["version"] = HIERSAMPLE_VERSION;
  m["subcommand"] = run.subcommand;
  m["config"] = run.config;
  m["config_sha256"] = sha256_hex(run.config.dump());
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  const std::string manifest = m.dump(2) + "\n";
  std::vector<std::filesystem::path> written;
  try {
    for (const auto& [p, bytes] : run.outputs) {
      write_atomic(p, bytes);
      written.push_back(p);
      write_atomic(manifest_path(p), manifest);
      written.push_back(manifest_path(p));
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

// ---------------------------------------------------------------------------
// Argument helpers

inline std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw PreconditionError("not a number: '" + item + "'");
    }
    if (used != item.size()) throw PreconditionError("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> out;
  for (double d : parse_doubles(csv)) {
    if (d < 0 || d != std::floor(d)) throw PreconditionError("seeds must be nonnegative integers");
    out.push_back(static_cast<std::uint64_t>(d));
  }
  return out;
}

// Config-file entries become flags placed before the user's own, and every
// option keeps its last value, so explicit flags win.
inline std::vector<std::string> config_arguments(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("bad config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw PreconditionError("config file must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

// Every option of `sub` with its effective value, keyed by long name.
inline nlohmann::ordered_json resolved_config(const CLI::App& sub) {
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_min() == 0) {
      cfg[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      cfg[name] = opt->results().back();
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

inline std::size_t default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw PreconditionError(std::string(kThreadsEnv) + " must be a positive integer");
  }
  return 1;
}

struct MeasureOptions {
  std::string measure;
  std::size_t wl_iterations = 3;
  std::size_t radius = 2;
  std::size_t nbits = 2048;

  void add(CLI::App* app, bool required) {
    auto* o = app->add_option("--measure", measure, "similarity measure: wl | morgan")
                  ->check(CLI::IsMember({"wl", "morgan"}));
    if (required) o->required();
    app->add_option("--wl-iterations", wl_iterations, "WL refinement rounds");
    app->add_option("--radius", radius, "Morgan radius");
    app->add_option("--nbits", nbits, "Morgan fingerprint length")->check(CLI::PositiveNumber);
  }

  std::unique_ptr<SimilarityMeasure> make() const {
    if (measure == "wl") return std::make_unique<WlSimilarity>(wl_iterations);
    return std::make_unique<MorganTanimoto>(radius, nbits);
  }
};

struct DatasetOptions {
  std::string path;
  std::string format = "graph-jsonl";

  void add(CLI::App* app) {
    app->add_option("--in", path, "input dataset")->required();
    app->add_option("--format", format, "graph-jsonl | edge-list-dir")
        ->check(CLI::IsMember({"graph-jsonl", "edge-list-dir"}));
  }
  GraphDataset load() const { return load_dataset(path, parse_dataset_format(format)); }
};

inline SimilarityHierarchy load_hierarchy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open hierarchy " + path);
  return parse_hierarchy(in);
}

// ---------------------------------------------------------------------------
// Entry point

/// Runs one subcommand; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Similarity-hierarchy positive sampling toolkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(HIERSAMPLE_VERSION));

  std::size_t threads = 0;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->failure_message(CLI::FailureMessage::help);
    sub->add_option("--threads", threads, "worker threads (default: $" + std::string(kThreadsEnv) + " or 1)");
    sub->add_option("--config", config_path, "JSON file of flag values; explicit flags override it");
  };

  // build-hier
  auto* build = app.add_subcommand("build-hier", "build the similarity hierarchy over a dataset");
  DatasetOptions b_data;
  MeasureOptions b_measure;
  double b_tau = 0.0;
  std::string b_out, b_mode, b_masses, b_sims_out;
  CandidatePolicy b_policy;
  b_data.add(build);
  b_measure.add(build, true);
  build->add_option("--tau", b_tau, "similarity threshold in (0, 1)")->required();
  build->add_option("--mode", b_mode, "candidate filter: molecular | structural (default by measure)")
      ->check(CLI::IsMember({"molecular", "structural"}));
  build->add_option("--masses", b_masses, "mass table JSON (default: bundled standard weights)");
  build->add_option("--weight-tol", b_policy.weight_tol);
  build->add_option("--ring-tol", b_policy.ring_tol);
  build->add_option("--atom-tol", b_policy.atom_tol);
  build->add_option("--node-tol", b_policy.node_tol);
  build->add_option("--edge-tol", b_policy.edge_tol);
  build->add_option("--max-candidates", b_policy.max_candidates);
  build->add_option("--sims-out", b_sims_out, "also write every scored pair as JSON lines");
  build->add_option("--out", b_out, "hierarchy output file")->required();
  add_common(build);

  // sample
  auto* sample = app.add_subcommand("sample", "draw positive and negative instances from a hierarchy");
  std::string s_hier, s_out, s_strategy = "first-order", s_negatives = "in-batch";
  std::size_t s_pos = 0;
  SamplerConfig s_cfg;
  sample->add_option("--hier", s_hier, "hierarchy file")->required();
  sample->add_option("--strategy", s_strategy)->check(CLI::IsMember({"first-order", "high-order"}));
  sample->add_option("--pos-count", s_pos, "positives per target (default 3 first-order, 5 high-order)");
  sample->add_option("--walk-length", s_cfg.walk_length);
  sample->add_option("--walk-count", s_cfg.walk_count);
  sample->add_option("--neg-count", s_cfg.neg_count);
  sample->add_option("--negatives", s_negatives)->check(CLI::IsMember({"in-batch", "degree-weighted"}));
  sample->add_option("--batch-size", s_cfg.batch_size);
  sample->add_option("--seed", s_cfg.seed);
  sample->add_option("--out", s_out, "pair records output file")->required();
  add_common(sample);

  // mask
  auto* mask = app.add_subcommand("mask", "plan adaptive masks for every graph");
  DatasetOptions m_data;
  std::size_t m_steps = 5, m_alpha = 0;
  double m_ratio = 0.15;
  ReferencePredictor::Options m_model;
  std::uint64_t m_seed = 0;
  std::string m_out;
  m_data.add(mask);
  mask->add_option("--steps", m_steps, "masking steps T")->check(CLI::PositiveNumber);
  mask->add_option("--alpha", m_alpha, "nodes per step (default: derived from --ratio)");
  mask->add_option("--ratio", m_ratio, "fraction of nodes to mask");
  mask->add_option("--layers", m_model.layers);
  mask->add_option("--width", m_model.width);
  mask->add_option("--logit-scale", m_model.logit_scale);
  mask->add_option("--model-seed", m_model.seed);
  mask->add_option("--seed", m_seed);
  mask->add_option("--out", m_out, "mask plan output file")->required();
  add_common(mask);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "similarity and legality of augmented views across ratios");
  DatasetOptions w_data;
  MeasureOptions w_measure;
  w_measure.measure = "morgan";
  std::string w_kind = "drop-node", w_ratios = "0.05,0.1,0.15,0.2,0.25,0.3", w_seeds = "0,1,2", w_out;
  std::size_t w_sample = 200;
  bool w_no_legality = false;
  w_data.add(sweep);
  w_measure.add(sweep, false);
  sweep->add_option("--kind", w_kind)->check(CLI::IsMember({"drop-node", "drop-edge", "mask-attr", "rwr-subgraph"}));
  sweep->add_option("--ratios", w_ratios, "comma-separated ascending ratios");
  sweep->add_option("--seeds", w_seeds, "comma-separated seeds");
  sweep->add_option("--sample-size", w_sample);
  sweep->add_flag("--no-legality", w_no_legality, "skip the valence legality check");
  sweep->add_option("--out", w_out, "CSV output file")->required();
  add_common(sweep);

  // analyze-bias
  auto* bias = app.add_subcommand("analyze-bias", "posterior, gap and risk for a pair of similarity densities");
  double a_mu_pos = 0.7, a_sigma_pos = 0.1, a_mu_neg = 0.3, a_sigma_neg = 0.1, a_n_pos = 1e4, a_n_neg = 1e4;
  std::size_t a_points = 50, a_posterior_points = 1001;
  std::string a_out, a_posterior_out;
  bias->add_option("--mu-pos", a_mu_pos);
  bias->add_option("--sigma-pos", a_sigma_pos);
  bias->add_option("--mu-neg", a_mu_neg);
  bias->add_option("--sigma-neg", a_sigma_neg);
  bias->add_option("--n-pos", a_n_pos);
  bias->add_option("--n-neg", a_n_neg);
  bias->add_option("--points", a_points, "thresholds on the admissible grid");
  bias->add_option("--posterior-points", a_posterior_points);
  bias->add_option("--posterior-out", a_posterior_out, "also write the posterior grid as CSV");
  bias->add_option("--out", a_out, "gap/risk CSV output file")->required();
  add_common(bias);

  // analyze-grad
  auto* grad = app.add_subcommand("analyze-grad", "check analytic contrastive gradients against finite differences");
  std::size_t g_configs = 50, g_instances = 8, g_dim = 16, g_negatives = 255;
  double g_temperature = 0.07, g_step = 1e-5;
  std::uint64_t g_seed = 0;
  std::string g_out;
  grad->add_option("--configs", g_configs);
  grad->add_option("--instances", g_instances);
  grad->add_option("--dim", g_dim);
  grad->add_option("--temperature", g_temperature);
  grad->add_option("--negatives", g_negatives);
  grad->add_option("--step", g_step);
  grad->add_option("--seed", g_seed);
  grad->add_option("--out", g_out, "CSV output file")->required();
  add_common(grad);

  // oracle-exp
  auto* oracle = app.add_subcommand("oracle-exp", "false positives of first-order sampling on labeled synthetic graphs");
  OracleExperimentConfig o_cfg;
  std::string o_taus = "0.3,0.4,0.5,0.6,0.7,0.8,0.9", o_out;
  oracle->add_option("--classes", o_cfg.classes);
  oracle->add_option("--per-class", o_cfg.per_class);
  oracle->add_option("--noise", o_cfg.noise);
  oracle->add_option("--taus", o_taus);
  oracle->add_option("--base-nodes", o_cfg.base_nodes);
  oracle->add_option("--base-edges", o_cfg.base_edges);
  oracle->add_option("--draws", o_cfg.draws_per_target);
  oracle->add_option("--seed", o_cfg.seed);
  oracle->add_option("--out", o_out, "CSV output file")->required();
  add_common(oracle);

  // stats
  auto* stats = app.add_subcommand("stats", "hop similarity profile and sampler statistics of a hierarchy");
  DatasetOptions t_data;
  MeasureOptions t_measure;
  std::string t_hier, t_out, t_seeds = "0,1,2";
  std::size_t t_targets = 0, t_max_hop = 4, t_pos = 3, t_walk_length = 2, t_walk_count = 5;
  t_data.add(stats);
  t_measure.add(stats, true);
  stats->add_option("--hier", t_hier, "hierarchy file built from the same dataset")->required();
  stats->add_option("--targets", t_targets, "targets sampled per seed (default: all)");
  stats->add_option("--seeds", t_seeds);
  stats->add_option("--max-hop", t_max_hop);
  stats->add_option("--pos-count", t_pos, "positives per target for both strategies");
  stats->add_option("--walk-length", t_walk_length);
  stats->add_option("--walk-count", t_walk_count);
  stats->add_option("--out", t_out, "JSON output file")->required();
  add_common(stats);

  // Splice config-file flags in right after the subcommand name.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t k = 0; k < args.size(); ++k) {
      std::string path;
      if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
      if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
      if (path.empty()) continue;
      auto extra = config_arguments(path);
      std::size_t at = 0;
      while (at < args.size() && !app.get_subcommand_no_throw(args[at])) ++at;
      if (at < args.size()) args.insert(args.begin() + static_cast<std::ptrdiff_t>(at + 1), extra.begin(), extra.end());
      break;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunRecord run;
  run.subcommand = sub->get_name();

  try {
    if (threads == 0) threads = default_threads();
    WorkerPool pool(threads);
    const ParallelFor parallel = pool.executor();
    run.config = resolved_config(*sub);
    run.config["threads"] = std::to_string(threads);

    if (sub == build) {
      if (!(b_tau > 0.0 && b_tau < 1.0)) throw PreconditionError("--tau must lie in (0, 1)");
      auto ds = b_data.load();
      run.inputs.emplace_back(b_data.path);
      auto measure = b_measure.make();
      const std::string mode = !b_mode.empty() ? b_mode : (b_measure.measure == "morgan" ? "molecular" : "structural");
      b_policy.mode = mode == "molecular" ? CandidatePolicy::Mode::Molecular : CandidatePolicy::Mode::Structural;
      run.config["mode"] = mode;
      std::optional<MassTable> masses;
      if (b_policy.mode == CandidatePolicy::Mode::Molecular) {
        if (!b_masses.empty()) {
          masses = load_mass_table(b_masses);
          run.inputs.emplace_back(b_masses);
        } else {
          masses = default_mass_table();
        }
      }
      auto candidates = select_candidates(ds, b_policy, masses ? &*masses : nullptr, parallel);
      auto scorer = measure->index(ds.graphs, parallel);
      auto built = build_hierarchy_scored(ds, *scorer, b_tau, candidates, measure->digest(), parallel);
      run.outputs.emplace_back(b_out, serialize_hierarchy(built.hierarchy));
      if (!b_sims_out.empty()) run.outputs.emplace_back(b_sims_out, similarity_jsonl(ds.graphs, built.evaluated));
      out << "hierarchy: " << built.hierarchy.size() << " graphs, " << built.hierarchy.edge_count() << " edges, "
          << built.evaluated.size() << " pairs scored\n";
    } else if (sub == sample) {
      auto h = load_hierarchy(s_hier);
      run.inputs.emplace_back(s_hier);
      s_cfg.strategy = parse_strategy(s_strategy);
      s_cfg.negatives = parse_negative_policy(s_negatives);
      if (s_pos > 0) s_cfg.pos_count = s_pos;
      std::vector<std::uint32_t> targets(h.size());
      for (std::uint32_t i = 0; i < h.size(); ++i) targets[i] = i;
      auto pairs = sample_pairs(h, s_cfg, targets, parallel);
      std::size_t isolated = 0;
      for (const auto& p : pairs) isolated += p.isolated ? 1 : 0;
      run.outputs.emplace_back(s_out, serialize_pairs(h, pairs));
      out << "sampled " << pairs.size() << " targets";
      if (isolated) out << " (" << isolated << " isolated, no positives)";
      out << '\n';
    } else if (sub == mask) {
      auto ds = m_data.load();
      run.inputs.emplace_back(m_data.path);
      ReferencePredictor model(ds.node_vocab, m_model);
      std::vector<std::string> lines(ds.size());
      parallel(ds.size(), [&](std::size_t g) {
        const auto& graph = ds[g];
        std::vector<std::size_t> sizes = m_alpha > 0 ? std::vector<std::size_t>(m_steps, m_alpha)
                                                     : mask_schedule(graph.node_count(), m_ratio, m_steps);
        auto rng = Rng::substream(m_seed, {g});
        auto plan = adaptive_mask(graph, model, sizes, rng);
        lines[g] = mask_plan_record(graph, plan);
      });
      std::string body;
      for (const auto& l : lines) body += l + '\n';
      run.outputs.emplace_back(m_out, std::move(body));
      out << "planned masks for " << ds.size() << " graphs\n";
    } else if (sub == sweep) {
      auto ds = w_data.load();
      run.inputs.emplace_back(w_data.path);
      auto measure = w_measure.make();
      auto ratios = parse_doubles(w_ratios);
      auto seeds = parse_seeds(w_seeds);
      const auto valences = default_valence_table();
      const bool legality = !w_no_legality && ds.size() > 0 && ds[0].attributed();
      auto rep = similarity_sweep(ds, *measure, parse_augment_kind(w_kind), ratios, seeds, w_sample,
                                  legality ? &valences : nullptr, parallel);
      run.outputs.emplace_back(w_out, sweep_csv(rep));
      out << sweep_table(rep);
    } else if (sub == bias) {
      DensityModel dm(a_mu_pos, a_sigma_pos, a_mu_neg, a_sigma_neg, a_n_pos, a_n_neg);
      auto taus = admissible_grid(dm, a_points);
      auto rows = gap_risk_grid(dm, taus, parallel);
      run.outputs.emplace_back(a_out, gap_risk_csv(rows));
      if (!a_posterior_out.empty()) run.outputs.emplace_back(a_posterior_out, posterior_csv(dm, a_posterior_points));
      const auto iv = monotone_interval(dm);
      out << "tau3 = " << tau3(dm) << "; posterior case " << iv.case_label << ", non-decreasing on "
          << (iv.lo_closed ? '[' : '(') << iv.lo << ", " << iv.hi << (iv.hi_closed ? ']' : ')') << '\n';
    } else if (sub == grad) {
      if (g_instances < 3) throw PreconditionError("--instances must be at least 3");
      ContrastConfig cc{g_temperature, g_negatives};
      struct Row {
        std::size_t i, j;
        double cross_err, self_err, cross_orth, self_orth;
      };
      std::vector<Row> rows(g_configs);
      parallel(g_configs, [&](std::size_t c) {
        auto rng = Rng::substream(g_seed, {c});
        std::vector<Vector> w(g_instances, Vector(g_dim));
        for (auto& v : w) {
          for (auto& x : v) x = rng.normal();
        }
        EmbeddingSet emb(std::move(w));
        std::vector<PositiveDistribution> pos(g_instances);
        for (std::size_t x = 0; x < g_instances; ++x) {
          double total = 0.0;
          for (std::size_t y = 0; y < g_instances; ++y) {
            if (y == x) continue;
            const double p = rng.uniform() + 0.05;
            pos[x].push_back({y, p});
            total += p;
          }
          for (auto& m : pos[x]) m.p /= total;
        }
        std::vector<std::size_t> pool(g_instances);
        for (std::size_t x = 0; x < g_instances; ++x) pool[x] = x;
        const std::size_t i = static_cast<std::size_t>(rng.below(g_instances));
        std::size_t j = static_cast<std::size_t>(rng.below(g_instances - 1));
        if (j >= i) ++j;
        auto g = analytic_gradient(i, j, emb, pos, pool, cc);
        auto fd_cross = finite_difference_gradient(i, j, emb, pos[j], pool, cc, g_step);
        auto fd_self = finite_difference_gradient(i, i, emb, pos[i], pool, cc, g_step);
        rows[c] = {i, j, relative_error(g.cross.total, fd_cross), relative_error(g.self.total, fd_self),
                   std::abs(dot(emb.z(i), g.cross.total)), std::abs(dot(emb.z(i), g.self.total))};
      });
      std::ostringstream os;
      os.precision(17);
      os << "config,i,j,rel_err_cross,rel_err_self,orth_cross,orth_self\n";
      double worst = 0.0;
      for (std::size_t c = 0; c < rows.size(); ++c) {
        const auto& r = rows[c];
        os << c << ',' << r.i << ',' << r.j << ',' << r.cross_err << ',' << r.self_err << ',' << r.cross_orth << ','
           << r.self_orth << '\n';
        worst = std::max({worst, r.cross_err, r.self_err});
      }
      run.outputs.emplace_back(g_out, os.str());
      out << "worst relative error over " << rows.size() << " configurations: " << worst << '\n';
    } else if (sub == oracle) {
      o_cfg.taus = parse_doubles(o_taus);
      auto points = synthetic_oracle_experiment(o_cfg, parallel);
      run.outputs.emplace_back(o_out, oracle_csv(points));
      out << oracle_csv(points);
    } else if (sub == stats) {
      auto ds = t_data.load();
      auto h = load_hierarchy(t_hier);
      run.inputs.emplace_back(t_data.path);
      run.inputs.emplace_back(t_hier);
      if (h.size() != ds.size()) throw DataError("hierarchy and dataset sizes differ");
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (h.id(i) != ds[i].id()) throw DataError("hierarchy id '" + h.id(i) + "' does not match dataset order");
      }
      auto measure = t_measure.make();
      if (measure->digest() != h.measure()) {
        throw DataError("hierarchy was built with '" + h.measure() + "', not '" + measure->digest() + "'");
      }
      auto scorer = measure->index(ds.graphs, parallel);
      nlohmann::ordered_json report;
      report["measure"] = h.measure();
      report["tau"] = h.tau();
      auto per_seed = nlohmann::ordered_json::array();
      for (auto seed : parse_seeds(t_seeds)) {
        std::vector<std::uint32_t> targets;
        if (t_targets == 0 || t_targets >= h.size()) {
          for (std::uint32_t i = 0; i < h.size(); ++i) targets.push_back(i);
        } else {
          auto pick = Rng::substream(seed, {0x7a6eULL});
          targets = sample_without_replacement(h.size(), t_targets, pick);
          std::sort(targets.begin(), targets.end());
        }
        auto to_json = [](const std::vector<std::optional<double>>& xs) {
          auto a = nlohmann::ordered_json::array();
          for (const auto& x : xs) a.push_back(x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr));
          return a;
        };
        auto stat_json = [](const SamplerStats& s) {
          auto v = [](const std::optional<double>& x) {
            return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
          };
          return nlohmann::ordered_json{
              {"inter_pos_sim", v(s.inter_pos_sim)}, {"target_sim", v(s.target_sim)}, {"connected_ratio", v(s.connected_ratio)}};
        };
        SamplerConfig first;
        first.seed = seed;
        first.pos_count = t_pos;
        SamplerConfig second = first;
        second.strategy = SamplingStrategy::HighOrder;
        second.walk_length = t_walk_length;
        second.walk_count = t_walk_count;
        nlohmann::ordered_json row;
        row["seed"] = seed;
        row["targets"] = targets.size();
        row["hop_profile"] = to_json(hop_similarity_profile(h, *scorer, targets, t_max_hop, parallel));
        row["first_order"] = stat_json(sampler_stats(h, *scorer, first, targets, parallel));
        row["high_order"] = stat_json(sampler_stats(h, *scorer, second, targets, parallel));
        per_seed.push_back(std::move(row));
      }
      report["seeds"] = std::move(per_seed);
      const std::string text = report.dump(2) + "\n";
      run.outputs.emplace_back(t_out, text);
      out << text;
    }
    commit(run);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace hiersample::cli
