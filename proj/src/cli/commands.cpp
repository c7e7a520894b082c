#include "mpcl/analysis.hpp"
#include "mpcl/cli.hpp"
#include "mpcl/error.hpp"
#include "mpcl/format.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace mpcl::cli {

namespace fs = std::filesystem;

LoadedGraph load_graph(const Config& c) {
  const WeightMode mode = parse_weight_mode(c.get("graph.weight_mode", "degree"));
  const std::string source = c.get("graph.source", "synthetic");
  std::optional<std::vector<int>> groups;
  if (c.has("graph.groups")) groups = parse_ids_csv(read_text(c.get("graph.groups", "")), "group");

  if (source == "synthetic") {
    const double eps = c.get_double("graph.epsilon", 0.4);
    PointCloud cloud = build_synthetic_gaussians(synth_config(c));
    AugmentationGraph g = build_threshold_graph(cloud.points, eps, c.get_bool("graph.self_loops", false), mode)
                              .with_labels(cloud.labels);
    if (groups) g = g.with_groups(std::move(*groups));
    return {std::move(g), std::move(cloud.points)};
  }
  if (source != "files") throw ConfigError("graph.source: expected synthetic|files, got '" + source + "'");
  if (!c.has("graph.edges")) throw ConfigError("graph.source = files requires graph.edges");
  AugmentationGraph g = load_edge_list(read_text(c.get("graph.edges", "")), mode);
  if (c.has("graph.labels")) g = g.with_labels(parse_ids_csv(read_text(c.get("graph.labels", "")), "label"));
  if (groups) g = g.with_groups(std::move(*groups));
  return {std::move(g), std::nullopt};
}

namespace {

fs::path output_dir(const Config& c) {
  const fs::path dir = c.get("outputs.dir", "out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

int cmd_synth(const Config& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GaussianMixtureConfig mix = synth_config(c);
    const double eps = c.get_double("graph.epsilon", 0.4);
    const fs::path dir = output_dir(c);
    DirectoryLock lock(dir);
    const PointCloud cloud = build_synthetic_gaussians(mix);
    const AugmentationGraph g =
        build_threshold_graph(cloud.points, eps, c.get_bool("graph.self_loops", false),
                              parse_weight_mode(c.get("graph.weight_mode", "degree")));
    write_text(dir / "points.csv", points_csv(cloud));
    write_text(dir / "labels.csv", ids_csv(cloud.labels, "label"));
    write_text(dir / "graph.edges", save_edge_list(g));
    report_warnings(g.warnings(), err);
    long edges = 0;
    for (Index i = 0; i < g.size(); ++i)
      for (Index j = i + 1; j < g.size(); ++j) edges += g.adjacency()(i, j) > 0.0;
    out << "nodes=" << g.size() << "\nedges=" << edges << "\nisolated=" << g.isolated_count() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_run(const Config& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const DynamicsConfig dyn = dynamics_config(c);
    LoadedGraph loaded = load_graph(c);
    AugmentationGraph& g = loaded.graph;
    if (dyn.rule == Rule::multi_stage && !g.has_groups()) {
      if (!g.has_labels()) throw ConfigError("rule multi_stage needs graph.groups or labels");
      err << "warning: no graph.groups given; grouping nodes by label\n";
      g = g.with_groups(g.labels());
    }
    Matrix f0 = c.get("dynamics.init", "uniform_box") == "given"
                    ? parse_features_csv(read_text(c.get("dynamics.init_path", "")))
                    : initial_features(g.size(), dyn);

    const fs::path dir = output_dir(c);
    DirectoryLock lock(dir);
    const fs::path snap_dir = dir / "snapshots";
    std::error_code ec;
    fs::remove_all(snap_dir, ec);

    Config resolved = c;
    resolved.set("graph.weight_mode", std::string(to_string(g.weight_mode())));
    resolved.set("dynamics.weighting",
                 resolve_node_weighted(dyn.weighting, g) ? "node_weighted" : "unweighted");
    write_text(dir / "run.cfg", resolved.render());

    auto persist = [&](const TrajectoryRecord& rec, const std::string* error) {
      write_text(dir / "trajectory.csv", trajectory_csv(rec, error));
      write_text(dir / "features_final.csv", features_csv(rec.final_features));
      if (!rec.snapshots.empty()) {
        fs::create_directories(snap_dir);
        for (const auto& [step, f] : rec.snapshots) {
          std::ostringstream name;
          name << "step_" << std::setw(6) << std::setfill('0') << step << ".csv";
          write_text(snap_dir / name.str(), features_csv(f));
        }
      }
      const bool plot = c.get_bool("outputs.plot", true);
      if (plot && rec.final_features.cols() == 2) {
        write_text(dir / "plot.svg",
                   scatter_svg(rec.final_features, g.has_labels() ? &g.labels() : nullptr));
      } else {
        fs::remove(dir / "plot.svg", ec);
      }
      report_warnings(rec.warnings, err);
    };

    try {
      const TrajectoryRecord rec = run(g, f0, dyn);
      persist(rec, nullptr);
      const auto& last = rec.rows.back();
      out << "steps=" << last.step << "\nL_total=" << format_double(last.l_total)
          << "\nresidual=" << format_double(last.residual) << '\n';
    } catch (const DivergenceError& e) {
      const std::string message = "divergence at step " + std::to_string(e.step()) + " node " +
                                  std::to_string(e.node());
      persist(e.partial(), &message);
      throw;
    }
    return static_cast<int>(kOk);
  });
}

int cmd_analyze(const Config& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!c.has("analyze.features")) throw ConfigError("analyze.features is required");
    const Matrix f = parse_features_csv(read_text(c.get("analyze.features", "")));
    std::optional<std::vector<int>> labels;
    if (c.has("analyze.labels")) labels = parse_ids_csv(read_text(c.get("analyze.labels", "")), "label");
    if (labels && static_cast<Index>(labels->size()) != f.rows())
      throw ConfigError("labels and features have different node counts");

    auto kv = [&](const char* key, double v) { out << key << '=' << format_double(v) << '\n'; };
    std::optional<Matrix> reference;
    if (c.has("analyze.reference")) reference = parse_features_csv(read_text(c.get("analyze.reference", "")));

    if (labels) {
      const ClusteringReport r = clustering_report(f, *labels, reference ? &*reference : nullptr);
      kv("nn_accuracy", r.nn_accuracy);
      kv("intra_mean", r.intra_mean);
      kv("inter_mean", r.inter_mean);
      kv("effective_rank", r.effective_rank);
      kv("between_within", r.between_within);
      out << "flagged_classes=";
      for (std::size_t i = 0; i < r.flagged_classes.size(); ++i) out << (i ? "," : "") << r.flagged_classes[i];
      out << '\n';
      if (r.distance_ratio) kv("distance_ratio", *r.distance_ratio);
    } else {
      const Matrix centered = f.rowwise() - f.colwise().mean();
      kv("effective_rank", effective_rank(centered));
    }
    if (c.has("analyze.graph")) {
      const AugmentationGraph g = load_edge_list(read_text(c.get("analyze.graph", "")),
                                                 parse_weight_mode(c.get("graph.weight_mode", "degree")));
      const FeatureMatrix fm = FeatureMatrix::bound(f, g);
      const double tau = c.get_double("analyze.temperature", 1.0);
      kv("equilibrium_residual", equilibrium_residual(fm, g, tau));
      kv("alignment_loss", alignment_loss(fm, g));
      kv("uniformity_loss", uniformity_loss(fm, g, tau));
      report_warnings(g.warnings(), err);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_check(const Config& c, std::ostream& out, std::ostream& err, const SuiteHooks& hooks) {
  return guarded(err, [&] {
    const long seed = c.get_int("check.seed", 0);
    if (seed < 0) throw ConfigError("check.seed must be >= 0");
    SuiteSizes sizes;
    sizes.nodes = static_cast<int>(c.get_int("check.nodes", sizes.nodes));
    sizes.dim = static_cast<int>(c.get_int("check.dim", sizes.dim));
    const auto reports = run_default_suite(static_cast<std::uint64_t>(seed), sizes, hooks);
    int failed = 0;
    for (const auto& r : reports) {
      out << r.line() << '\n';
      failed += !r.pass;
    }
    out << "SUMMARY checks=" << reports.size() << " failed=" << failed << '\n';
    return static_cast<int>(failed ? kCheckFailed : kOk);
  });
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive learning as message passing on augmentation graphs"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--set", overrides, "override one setting, key=value")->allow_extra_args(false);
  };
  CLI::App* synth = app.add_subcommand("synth", "generate the Gaussian mixture, labels and graph");
  CLI::App* run_cmd = app.add_subcommand("run", "run a dynamics rule and write the trajectory");
  CLI::App* analyze = app.add_subcommand("analyze", "clustering and equilibrium metrics for a feature file");
  CLI::App* check = app.add_subcommand("check", "run the numerical oracle suite");
  for (CLI::App* sub : {synth, run_cmd, analyze, check}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kConfigError;
  }

  Config config;
  try {
    if (!config_path.empty()) config = Config::load(config_path);
    for (const auto& o : overrides) config.set(o);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (synth->parsed()) return cmd_synth(config, out, err);
  if (run_cmd->parsed()) return cmd_run(config, out, err);
  if (analyze->parsed()) return cmd_analyze(config, out, err);
  return cmd_check(config, out, err);
}

}  // namespace mpcl::cli
