// Command-line front end: graph construction, transport distances,
// barycenters, the expected-barycenter-effect experiment, and the
// benchmark/convergence harnesses. Subcommands accept a JSON config file
// via --config; explicit flags override file values.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <iostream>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "geosink/barycenter.hpp"
#include "geosink/bench.hpp"
#include "geosink/graph.hpp"
#include "geosink/heat.hpp"
#include "geosink/pointcloud.hpp"
#include "geosink/transport.hpp"

using nlohmann::json;
namespace gs = geosink;

namespace {

// ---------------------------------------------------------------------------
// Config-file merging: values from --config fill every option the user did
// not pass on the command line; unknown keys are rejected.
// ---------------------------------------------------------------------------

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) gs::fail(gs::errc::io_error, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    gs::fail(gs::errc::io_error, "bad JSON in '" + path + "': " + e.what());
  }
  gs::require(j.is_object(), gs::errc::invalid_argument, "config root must be an object");
  return j;
}

template <typename T>
void merge_key(const json& cfg, CLI::App* cmd, const std::string& flag, T& field,
               std::set<std::string>& consumed) {
  const std::string key = flag.substr(2);  // strip "--"
  consumed.insert(key);
  if (!cfg.contains(key)) return;
  if (cmd->count(flag) > 0) return;  // explicit flag wins
  try {
    field = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    gs::fail(gs::errc::invalid_argument, "config key '" + key + "': " + e.what());
  }
}

void reject_unknown(const json& cfg, const std::set<std::string>& consumed) {
  for (const auto& item : cfg.items())
    gs::require(consumed.count(item.key()) > 0, gs::errc::invalid_argument,
                "unknown config key '" + item.key() + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) gs::fail(gs::errc::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) gs::fail(gs::errc::io_error, "write failed for '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
  return out.str();
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void apply_thread_cap(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("GEOSINK_THREADS")) threads = std::atoi(env);
  }
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

// Shared graph/filter options.
struct GraphOpts {
  std::string points_path;
  std::string graph_path;
  int k = 5;
  double alpha = 40.0;
  std::string kind = "normalized";
};

void add_graph_opts(CLI::App* cmd, GraphOpts& g, bool allow_prebuilt = true) {
  cmd->add_option("--points", g.points_path, "point cloud CSV (one point per row)");
  if (allow_prebuilt) cmd->add_option("--graph", g.graph_path, "prebuilt graph file");
  cmd->add_option("--k", g.k, "nearest neighbours for the affinity graph");
  cmd->add_option("--alpha", g.alpha, "decay exponent of the affinity kernel");
  cmd->add_option("--kind", g.kind, "laplacian kind: combinatorial or normalized");
}

void merge_graph_opts(const json& cfg, CLI::App* cmd, GraphOpts& g, std::set<std::string>& seen) {
  merge_key(cfg, cmd, "--points", g.points_path, seen);
  merge_key(cfg, cmd, "--graph", g.graph_path, seen);
  merge_key(cfg, cmd, "--k", g.k, seen);
  merge_key(cfg, cmd, "--alpha", g.alpha, seen);
  merge_key(cfg, cmd, "--kind", g.kind, seen);
}

gs::GraphLaplacian build_laplacian(const GraphOpts& g) {
  gs::SparseSymMatrix adjacency;
  if (!g.graph_path.empty()) {
    adjacency = gs::load_graph(g.graph_path);
  } else {
    gs::require(!g.points_path.empty(), gs::errc::invalid_argument,
                "either --points or --graph is required");
    adjacency = gs::knn_alpha_decay_graph(gs::load_point_csv(g.points_path), g.k, g.alpha);
  }
  return gs::laplacian(adjacency, gs::laplacian_kind_from_string(g.kind));
}

json graph_opts_json(const GraphOpts& g) {
  return json{{"points", g.points_path}, {"graph", g.graph_path}, {"k", g.k},
              {"alpha", g.alpha},        {"kind", g.kind}};
}

gs::Distribution distribution_from_spec(int n, const std::string& weights_path, int label,
                                        const std::vector<int>& labels) {
  if (!weights_path.empty()) {
    Eigen::VectorXd w = gs::load_weight_csv(weights_path);
    gs::require(static_cast<int>(w.size()) == n, gs::errc::length_mismatch,
                "weight file does not match graph size");
    return gs::Distribution::from_weights(std::move(w));
  }
  gs::require(!labels.empty(), gs::errc::invalid_argument,
              "distribution needs either a weight CSV or --labels plus a label id");
  gs::require(static_cast<int>(labels.size()) == n, gs::errc::length_mismatch,
              "label file does not match graph size");
  std::vector<int> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) rows.push_back(static_cast<int>(i));
  gs::require(!rows.empty(), gs::errc::invalid_argument,
              "label " + std::to_string(label) + " selects no vertices");
  return gs::Distribution::indicator(n, rows);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void setup_cmd_graph(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("graph", "build a k-NN affinity graph from a point CSV");
  struct Opts {
    std::string config;
    GraphOpts g;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  add_graph_opts(cmd, o->g, false);
  cmd->add_option("--output", o->output, "graph file to write");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_graph_opts(cfg, cmd, o->g, seen);
      std::string unused;
      merge_key(cfg, cmd, "--output", o->output, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->g.points_path.empty(), gs::errc::invalid_argument, "--points is required");
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    const gs::PointCloud cloud = gs::load_point_csv(o->g.points_path);
    const gs::SparseSymMatrix adjacency = gs::knn_alpha_decay_graph(cloud, o->g.k, o->g.alpha);
    const gs::GraphLaplacian lap =
        gs::laplacian(adjacency, gs::laplacian_kind_from_string(o->g.kind));
    gs::save_graph(adjacency, o->output);
    std::cout << "n=" << adjacency.size() << " nnz=" << adjacency.stored_entries()
              << " lambda_max=" << lap.lambda_max_bound << "\n";
  });
}

void setup_cmd_distance(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("distance", "transport distance between two distributions");
  struct Opts {
    std::string config;
    GraphOpts g;
    double t = 10.0;
    int degree = 30;
    double tol = 1e-6;
    int max_iter = 500;
    std::string labels_path, mu_path, nu_path, a_path, output;
    int mu_label = -1, nu_label = -1;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  add_graph_opts(cmd, o->g);
  cmd->add_option("--t", o->t, "diffusion time");
  cmd->add_option("--degree", o->degree, "Chebyshev degree");
  cmd->add_option("--tol", o->tol, "L1 marginal tolerance");
  cmd->add_option("--max-iter", o->max_iter, "maximum Sinkhorn sweeps");
  cmd->add_option("--labels", o->labels_path, "per-vertex label CSV");
  cmd->add_option("--mu", o->mu_path, "weight CSV for the source distribution");
  cmd->add_option("--nu", o->nu_path, "weight CSV for the target distribution");
  cmd->add_option("--mu-label", o->mu_label, "label id selecting the source indicator");
  cmd->add_option("--nu-label", o->nu_label, "label id selecting the target indicator");
  cmd->add_option("--a", o->a_path, "vertex weight CSV (default uniform)");
  cmd->add_option("--output", o->output, "result JSON path");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_graph_opts(cfg, cmd, o->g, seen);
      merge_key(cfg, cmd, "--t", o->t, seen);
      merge_key(cfg, cmd, "--degree", o->degree, seen);
      merge_key(cfg, cmd, "--tol", o->tol, seen);
      merge_key(cfg, cmd, "--max-iter", o->max_iter, seen);
      merge_key(cfg, cmd, "--labels", o->labels_path, seen);
      merge_key(cfg, cmd, "--mu", o->mu_path, seen);
      merge_key(cfg, cmd, "--nu", o->nu_path, seen);
      merge_key(cfg, cmd, "--mu-label", o->mu_label, seen);
      merge_key(cfg, cmd, "--nu-label", o->nu_label, seen);
      merge_key(cfg, cmd, "--a", o->a_path, seen);
      merge_key(cfg, cmd, "--output", o->output, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    const gs::GraphLaplacian lap = build_laplacian(o->g);
    const int n = lap.size();
    std::vector<int> labels;
    if (!o->labels_path.empty()) labels = gs::load_label_csv(o->labels_path);
    const gs::Distribution mu = distribution_from_spec(n, o->mu_path, o->mu_label, labels);
    const gs::Distribution nu = distribution_from_spec(n, o->nu_path, o->nu_label, labels);
    Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
    if (!o->a_path.empty()) {
      a = gs::load_weight_csv(o->a_path);
      gs::require(static_cast<int>(a.size()) == n, gs::errc::length_mismatch,
                  "vertex weight file does not match graph size");
    }

    const gs::HeatFilter filter(lap, o->t, o->degree);
    const gs::TransportResult res =
        gs::geodesic_sinkhorn(filter, mu, nu, a, {o->max_iter, o->tol});

    json out{{"config",
              {{"graph", graph_opts_json(o->g)},
               {"t", o->t},
               {"degree", o->degree},
               {"tol", o->tol},
               {"max_iter", o->max_iter},
               {"mu", o->mu_path.empty() ? json(o->mu_label) : json(o->mu_path)},
               {"nu", o->nu_path.empty() ? json(o->nu_label) : json(o->nu_path)}}},
             {"n", n},
             {"cost", res.cost},
             {"kl_form_cost", res.kl_form_cost()},
             {"normalized_cost", res.normalized_cost()},
             {"iterations", res.iterations},
             {"converged", res.converged},
             {"marginal_error", res.marginal_error}};
    write_json(o->output, out);
    std::cout << "cost=" << res.cost << " iterations=" << res.iterations
              << " converged=" << (res.converged ? "true" : "false") << "\n";
  });
}

void setup_cmd_barycenter(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("barycenter", "entropic barycenter of a family of distributions");
  struct Opts {
    std::string config;
    GraphOpts g;
    double t = 10.0;
    int degree = 30;
    double tol = 1e-6;
    int max_iter = 500;
    std::string labels_path, output, json_output;
    std::vector<int> member_labels;
    std::vector<std::string> weight_files;
    std::vector<double> alphas;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  add_graph_opts(cmd, o->g);
  cmd->add_option("--t", o->t, "diffusion time");
  cmd->add_option("--degree", o->degree, "Chebyshev degree");
  cmd->add_option("--tol", o->tol, "L1 marginal tolerance");
  cmd->add_option("--max-iter", o->max_iter, "maximum sweeps");
  cmd->add_option("--labels", o->labels_path, "per-vertex label CSV");
  cmd->add_option("--members", o->member_labels, "label ids forming the family")->delimiter(',');
  cmd->add_option("--weights", o->weight_files, "weight CSVs forming the family")->delimiter(',');
  cmd->add_option("--alphas", o->alphas, "family weights (default uniform)")->delimiter(',');
  cmd->add_option("--output", o->output, "barycenter CSV path (vertex_index,weight)");
  cmd->add_option("--summary", o->json_output, "optional summary JSON path");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_graph_opts(cfg, cmd, o->g, seen);
      merge_key(cfg, cmd, "--t", o->t, seen);
      merge_key(cfg, cmd, "--degree", o->degree, seen);
      merge_key(cfg, cmd, "--tol", o->tol, seen);
      merge_key(cfg, cmd, "--max-iter", o->max_iter, seen);
      merge_key(cfg, cmd, "--labels", o->labels_path, seen);
      merge_key(cfg, cmd, "--members", o->member_labels, seen);
      merge_key(cfg, cmd, "--weights", o->weight_files, seen);
      merge_key(cfg, cmd, "--alphas", o->alphas, seen);
      merge_key(cfg, cmd, "--output", o->output, seen);
      merge_key(cfg, cmd, "--summary", o->json_output, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    const gs::GraphLaplacian lap = build_laplacian(o->g);
    const int n = lap.size();

    gs::DistributionFamily family;
    family.label = "family";
    if (!o->weight_files.empty()) {
      for (const auto& f : o->weight_files)
        family.members.push_back(distribution_from_spec(n, f, -1, {}));
    } else {
      gs::require(!o->labels_path.empty() && !o->member_labels.empty(), gs::errc::invalid_argument,
                  "provide --weights or --labels with --members");
      const auto labels = gs::load_label_csv(o->labels_path);
      for (int id : o->member_labels)
        family.members.push_back(distribution_from_spec(n, "", id, labels));
    }
    if (!o->alphas.empty()) {
      family.alphas = Eigen::Map<const Eigen::VectorXd>(o->alphas.data(),
                                                        static_cast<Eigen::Index>(o->alphas.size()));
    }

    const gs::HeatFilter filter(lap, o->t, o->degree);
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
    const gs::BarycenterResult res =
        gs::sinkhorn_barycenter(filter, family, a, {o->max_iter, o->tol});

    std::ostringstream csv;
    csv.precision(17);
    csv << "vertex_index,weight\n";
    for (int i = 0; i < n; ++i) csv << i << ',' << res.barycenter.weights(i) << '\n';
    write_text(o->output, csv.str());

    if (!o->json_output.empty()) {
      write_json(o->json_output,
                 json{{"config",
                       {{"graph", graph_opts_json(o->g)},
                        {"t", o->t},
                        {"degree", o->degree},
                        {"tol", o->tol},
                        {"max_iter", o->max_iter},
                        {"members", o->member_labels},
                        {"weights", o->weight_files}}},
                      {"iterations", res.iterations},
                      {"converged", res.converged},
                      {"marginal_error", res.marginal_error}});
    }
    std::cout << "iterations=" << res.iterations
              << " converged=" << (res.converged ? "true" : "false")
              << " marginal_error=" << res.marginal_error << "\n";
  });
}

void setup_cmd_ebe(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("ebe", "expected barycenter effect between two families");
  struct Opts {
    std::string config;
    bool synthetic = false;
    std::string outlier = "-60";  // number or "none"
    int samples = 500;
    int dim = 1;
    int control_members = 10;
    int treated_members = 10;
    double shift = 5.0;
    std::uint64_t seed = 1;
    GraphOpts g;
    double t = 3.0;
    int degree = 36;
    double tol = 1e-6;
    int max_iter = 60;
    std::string labels_path, features_path, output;
    std::vector<int> treated_labels, control_labels;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  cmd->add_flag("--synthetic", o->synthetic, "run the synthetic Gaussian-family experiment");
  cmd->add_option("--outlier", o->outlier, "outlier mean, or 'none'");
  cmd->add_option("--samples", o->samples, "samples per member");
  cmd->add_option("--dim", o->dim, "feature dimension");
  cmd->add_option("--control-members", o->control_members, "members in the control family");
  cmd->add_option("--treated-members", o->treated_members, "members in the treated family");
  cmd->add_option("--shift", o->shift, "treatment shift on the first coordinate");
  cmd->add_option("--seed", o->seed, "RNG seed");
  add_graph_opts(cmd, o->g);
  cmd->add_option("--t", o->t, "diffusion time");
  cmd->add_option("--degree", o->degree, "Chebyshev degree");
  cmd->add_option("--tol", o->tol, "L1 marginal tolerance");
  cmd->add_option("--max-iter", o->max_iter, "maximum sweeps");
  cmd->add_option("--labels", o->labels_path, "per-vertex member label CSV (file mode)");
  cmd->add_option("--treated", o->treated_labels, "treated member label ids")->delimiter(',');
  cmd->add_option("--control", o->control_labels, "control member label ids")->delimiter(',');
  cmd->add_option("--features", o->features_path, "feature CSV (default: the points)");
  cmd->add_option("--output", o->output, "result JSON path");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_key(cfg, cmd, "--synthetic", o->synthetic, seen);
      merge_key(cfg, cmd, "--outlier", o->outlier, seen);
      merge_key(cfg, cmd, "--samples", o->samples, seen);
      merge_key(cfg, cmd, "--dim", o->dim, seen);
      merge_key(cfg, cmd, "--control-members", o->control_members, seen);
      merge_key(cfg, cmd, "--treated-members", o->treated_members, seen);
      merge_key(cfg, cmd, "--shift", o->shift, seen);
      merge_key(cfg, cmd, "--seed", o->seed, seen);
      merge_graph_opts(cfg, cmd, o->g, seen);
      merge_key(cfg, cmd, "--t", o->t, seen);
      merge_key(cfg, cmd, "--degree", o->degree, seen);
      merge_key(cfg, cmd, "--tol", o->tol, seen);
      merge_key(cfg, cmd, "--max-iter", o->max_iter, seen);
      merge_key(cfg, cmd, "--labels", o->labels_path, seen);
      merge_key(cfg, cmd, "--treated", o->treated_labels, seen);
      merge_key(cfg, cmd, "--control", o->control_labels, seen);
      merge_key(cfg, cmd, "--features", o->features_path, seen);
      merge_key(cfg, cmd, "--output", o->output, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    Eigen::VectorXd tau, tau_tv;
    bool conv_t = false, conv_c = false;
    json config_echo;

    if (o->synthetic) {
      gs::EbeConfig cfg;
      cfg.has_outlier = o->outlier != "none";
      if (cfg.has_outlier) cfg.outlier_mean = std::stod(o->outlier);
      cfg.treatment_shift = o->shift;
      cfg.control_members = o->control_members;
      cfg.treated_members = o->treated_members;
      cfg.samples_per_member = o->samples;
      cfg.dim = o->dim;
      cfg.seed = o->seed;
      cfg.k = o->g.k;
      cfg.alpha = o->g.alpha;
      cfg.kind = gs::laplacian_kind_from_string(o->g.kind);
      cfg.t = o->t;
      cfg.degree = o->degree;
      cfg.sinkhorn = {o->max_iter, o->tol};
      const gs::EbeResult res = gs::ebe_experiment(cfg);
      tau = res.tau;
      tau_tv = res.tau_tv;
      conv_t = res.converged_treated;
      conv_c = res.converged_control;
      config_echo = json{{"synthetic", true},
                         {"outlier", o->outlier},
                         {"samples", o->samples},
                         {"dim", o->dim},
                         {"control_members", o->control_members},
                         {"treated_members", o->treated_members},
                         {"shift", o->shift},
                         {"seed", o->seed},
                         {"graph", graph_opts_json(o->g)},
                         {"t", o->t},
                         {"degree", o->degree},
                         {"tol", o->tol},
                         {"max_iter", o->max_iter}};
    } else {
      const gs::GraphLaplacian lap = build_laplacian(o->g);
      const int n = lap.size();
      gs::require(!o->labels_path.empty() && !o->treated_labels.empty() &&
                      !o->control_labels.empty(),
                  gs::errc::invalid_argument,
                  "file mode needs --labels, --treated and --control");
      const auto labels = gs::load_label_csv(o->labels_path);
      gs::DistributionFamily treated, control;
      treated.label = "treated";
      control.label = "control";
      for (int id : o->treated_labels)
        treated.members.push_back(distribution_from_spec(n, "", id, labels));
      for (int id : o->control_labels)
        control.members.push_back(distribution_from_spec(n, "", id, labels));

      Eigen::MatrixXd features;
      if (!o->features_path.empty()) {
        features = gs::load_point_csv(o->features_path).points;
      } else {
        gs::require(!o->g.points_path.empty(), gs::errc::invalid_argument,
                    "file mode needs --features or --points");
        features = gs::load_point_csv(o->g.points_path).points;
      }
      gs::require(static_cast<int>(features.rows()) == n, gs::errc::length_mismatch,
                  "features must be row-aligned with vertices");

      const gs::HeatFilter filter(lap, o->t, o->degree);
      const Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
      const auto bt = gs::sinkhorn_barycenter(filter, treated, a, {o->max_iter, o->tol});
      const auto bc = gs::sinkhorn_barycenter(filter, control, a, {o->max_iter, o->tol});
      tau = features.transpose() * (bt.barycenter.weights - bc.barycenter.weights);
      tau_tv = gs::tv_baseline_effect(treated, control, features);
      conv_t = bt.converged;
      conv_c = bc.converged;
      config_echo = json{{"synthetic", false},
                         {"graph", graph_opts_json(o->g)},
                         {"labels", o->labels_path},
                         {"treated", o->treated_labels},
                         {"control", o->control_labels},
                         {"t", o->t},
                         {"degree", o->degree},
                         {"tol", o->tol},
                         {"max_iter", o->max_iter}};
    }

    write_json(o->output, json{{"config", config_echo},
                               {"label", "treated-vs-control"},
                               {"tau", vector_json(tau)},
                               {"baseline_tau", vector_json(tau_tv)},
                               {"converged", conv_t && conv_c}});
    std::cout << "tau[0]=" << tau(0) << " baseline_tau[0]=" << tau_tv(0)
              << " converged=" << ((conv_t && conv_c) ? "true" : "false") << "\n";
  });
}

void setup_cmd_knn_bench(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("knn-bench", "nearest-neighbour distribution benchmark");
  struct Opts {
    std::string config;
    int n_dists = 15;
    int samples = 1000;
    double sigma = 3.0;
    int ambient_dim = 10;
    std::vector<std::uint64_t> seeds = {1};
    std::vector<std::string> methods = {"geodesic_sinkhorn", "dense_sinkhorn_w1",
                                        "dense_sinkhorn_w2"};
    GraphOpts g;
    double t = 20.0;
    int degree = 100;
    int euler_steps = 30;
    double lambda_w1 = 2.0;
    double lambda_w2 = 20.0;
    double tol = 1e-6;
    int max_iter = 500;
    std::string output, matrices_prefix, timings_path;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  cmd->add_option("--n-dists", o->n_dists, "number of distributions");
  cmd->add_option("--samples", o->samples, "samples per distribution");
  cmd->add_option("--sigma", o->sigma, "intrinsic noise sigma");
  cmd->add_option("--ambient-dim", o->ambient_dim, "embedding dimension");
  cmd->add_option("--seeds", o->seeds, "seeds")->delimiter(',');
  cmd->add_option("--methods", o->methods, "methods to run")->delimiter(',');
  add_graph_opts(cmd, o->g, false);
  cmd->add_option("--t", o->t, "diffusion time");
  cmd->add_option("--degree", o->degree, "Chebyshev degree");
  cmd->add_option("--euler-steps", o->euler_steps, "backward-Euler substeps");
  cmd->add_option("--lambda-w1", o->lambda_w1, "dense baseline regularisation (distance cost)");
  cmd->add_option("--lambda-w2", o->lambda_w2, "dense baseline regularisation (squared cost)");
  cmd->add_option("--tol", o->tol, "L1 marginal tolerance");
  cmd->add_option("--max-iter", o->max_iter, "maximum Sinkhorn sweeps");
  cmd->add_option("--output", o->output, "report JSON path");
  cmd->add_option("--matrices", o->matrices_prefix, "prefix for per-seed distance CSVs");
  cmd->add_option("--timings", o->timings_path, "separate wall-time JSON (non-deterministic)");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_key(cfg, cmd, "--n-dists", o->n_dists, seen);
      merge_key(cfg, cmd, "--samples", o->samples, seen);
      merge_key(cfg, cmd, "--sigma", o->sigma, seen);
      merge_key(cfg, cmd, "--ambient-dim", o->ambient_dim, seen);
      merge_key(cfg, cmd, "--seeds", o->seeds, seen);
      merge_key(cfg, cmd, "--methods", o->methods, seen);
      merge_graph_opts(cfg, cmd, o->g, seen);
      merge_key(cfg, cmd, "--t", o->t, seen);
      merge_key(cfg, cmd, "--degree", o->degree, seen);
      merge_key(cfg, cmd, "--euler-steps", o->euler_steps, seen);
      merge_key(cfg, cmd, "--lambda-w1", o->lambda_w1, seen);
      merge_key(cfg, cmd, "--lambda-w2", o->lambda_w2, seen);
      merge_key(cfg, cmd, "--tol", o->tol, seen);
      merge_key(cfg, cmd, "--max-iter", o->max_iter, seen);
      merge_key(cfg, cmd, "--output", o->output, seen);
      merge_key(cfg, cmd, "--matrices", o->matrices_prefix, seen);
      merge_key(cfg, cmd, "--timings", o->timings_path, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    gs::KnnBenchConfig cfg;
    cfg.n_distributions = o->n_dists;
    cfg.samples_per_dist = o->samples;
    cfg.noise_sigma = o->sigma;
    cfg.ambient_dim = o->ambient_dim;
    cfg.seeds = o->seeds;
    cfg.methods.clear();
    for (const auto& ms : o->methods) cfg.methods.push_back(gs::bench_method_from_string(ms));
    cfg.k = o->g.k;
    cfg.alpha = o->g.alpha;
    cfg.kind = gs::laplacian_kind_from_string(o->g.kind);
    cfg.t = o->t;
    cfg.degree = o->degree;
    cfg.euler_steps = o->euler_steps;
    cfg.lambda_w1 = o->lambda_w1;
    cfg.lambda_w2 = o->lambda_w2;
    cfg.sinkhorn = {o->max_iter, o->tol};

    const gs::KnnBenchResult res = gs::knn_benchmark(cfg);

    const json config_echo{{"n_dists", o->n_dists},   {"samples", o->samples},
                           {"sigma", o->sigma},       {"ambient_dim", o->ambient_dim},
                           {"seeds", o->seeds},       {"methods", o->methods},
                           {"k", o->g.k},             {"alpha", o->g.alpha},
                           {"kind", o->g.kind},       {"t", o->t},
                           {"degree", o->degree},     {"euler_steps", o->euler_steps},
                           {"lambda_w1", o->lambda_w1}, {"lambda_w2", o->lambda_w2},
                           {"tol", o->tol},           {"max_iter", o->max_iter}};

    json report{{"config", config_echo}};
    json timings{{"config", config_echo}};
    for (const auto& [name, rep] : res.mean_report) {
      report["mean"][name] = {{"spearman", rep.spearman},
                              {"pearson", rep.pearson},
                              {"p_at_5", rep.p_at_5}};
      timings["mean"][name] = rep.wall_times;
    }
    for (const auto& sr : res.per_seed) {
      json seed_block{{"seed", sr.seed}};
      json seed_times{{"seed", sr.seed}};
      for (const auto& [name, rep] : sr.reports) {
        seed_block["metrics"][name] = {{"spearman", rep.spearman},
                                       {"pearson", rep.pearson},
                                       {"p_at_5", rep.p_at_5}};
        seed_times["times"][name] = rep.wall_times;
      }
      report["seeds"].push_back(seed_block);
      timings["seeds"].push_back(seed_times);
    }
    write_json(o->output, report);
    if (!o->timings_path.empty()) write_json(o->timings_path, timings);

    if (!o->matrices_prefix.empty()) {
      std::vector<std::string> header;
      for (int i = 0; i < o->n_dists; ++i) header.push_back("d" + std::to_string(i));
      for (const auto& sr : res.per_seed) {
        for (const auto& [name, mat] : sr.distances) {
          const std::string path =
              o->matrices_prefix + "_" + name + "_seed" + std::to_string(sr.seed) + ".csv";
          write_text(path, matrix_csv(mat, header));
        }
        write_text(o->matrices_prefix + "_truth_seed" + std::to_string(sr.seed) + ".csv",
                   matrix_csv(sr.truth, header));
      }
    }

    for (const auto& [name, rep] : res.mean_report)
      std::cout << name << ": spearman=" << rep.spearman << " pearson=" << rep.pearson
                << " p@5=" << rep.p_at_5 << "\n";
  });
}

void setup_cmd_heat_study(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("heat-study", "Chebyshev vs backward-Euler approximation error");
  struct Opts {
    std::string config;
    GraphOpts g;
    int synthetic_points = 0;  // when > 0, generate a swiss roll instead of reading --points
    std::uint64_t seed = 1;
    double t = 10.0;
    std::vector<int> orders = {1,  2,  3,  4,  5,  6,  7,  8,  10, 12,
                               14, 16, 18, 20, 24, 28, 30, 40, 50};
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  add_graph_opts(cmd, o->g);
  cmd->add_option("--synthetic-points", o->synthetic_points,
                  "generate this many swiss-roll points instead of reading --points");
  cmd->add_option("--seed", o->seed, "RNG seed for the synthetic cloud");
  cmd->add_option("--t", o->t, "diffusion time");
  cmd->add_option("--orders", o->orders, "approximation orders to evaluate")->delimiter(',');
  cmd->add_option("--output", o->output, "CSV path");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_graph_opts(cfg, cmd, o->g, seen);
      merge_key(cfg, cmd, "--synthetic-points", o->synthetic_points, seen);
      merge_key(cfg, cmd, "--seed", o->seed, seen);
      merge_key(cfg, cmd, "--t", o->t, seen);
      merge_key(cfg, cmd, "--orders", o->orders, seen);
      merge_key(cfg, cmd, "--output", o->output, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    gs::GraphLaplacian lap;
    if (o->synthetic_points > 0) {
      const int per = std::max(1, o->synthetic_points / 5);
      const auto sample = gs::make_swiss_roll(5, per, 0.75, 3, o->seed);
      lap = gs::laplacian(gs::knn_alpha_decay_graph(sample.cloud(), o->g.k, o->g.alpha),
                          gs::laplacian_kind_from_string(o->g.kind));
    } else {
      lap = build_laplacian(o->g);
    }

    const auto rows = gs::convergence_study(lap, o->t, o->orders);
    gs::save_convergence_csv(rows, o->output);
    std::cout << "orders=" << rows.size() << " n=" << lap.size() << "\n";
  });
}

void setup_cmd_interp(CLI::App& app, std::shared_ptr<int> threads) {
  auto cmd = app.add_subcommand("interp", "held-out time-series interpolation benchmark");
  struct Opts {
    std::string config;
    int timepoints = 4;
    int samples = 400;
    double s_start = 7.0, s_step = 2.5, sigma_s = 2.0;
    bool flat = false;
    std::vector<std::uint64_t> seeds = {1};
    GraphOpts g;
    double t = 10.0;
    int degree = 64;
    double lambda = 4.0;
    double tol = 1e-6;
    int max_iter = 500;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON config file");
  cmd->add_option("--timepoints", o->timepoints, "number of timepoints (interior held out)");
  cmd->add_option("--samples", o->samples, "samples per timepoint");
  cmd->add_option("--s-start", o->s_start, "first centre on the arc");
  cmd->add_option("--s-step", o->s_step, "centre step between timepoints");
  cmd->add_option("--sigma-s", o->sigma_s, "spread along the arc");
  cmd->add_flag("--flat", o->flat, "straight-line control manifold");
  cmd->add_option("--seeds", o->seeds, "seeds")->delimiter(',');
  add_graph_opts(cmd, o->g, false);
  cmd->add_option("--t", o->t, "diffusion time");
  cmd->add_option("--degree", o->degree, "Chebyshev degree");
  cmd->add_option("--lambda", o->lambda, "dense baseline regularisation");
  cmd->add_option("--tol", o->tol, "L1 marginal tolerance");
  cmd->add_option("--max-iter", o->max_iter, "maximum Sinkhorn sweeps");
  cmd->add_option("--output", o->output, "result JSON path");

  cmd->callback([cmd, o, threads]() {
    apply_thread_cap(*threads);
    if (!o->config.empty()) {
      const json cfg = load_config_file(o->config);
      std::set<std::string> seen{"config"};
      merge_key(cfg, cmd, "--timepoints", o->timepoints, seen);
      merge_key(cfg, cmd, "--samples", o->samples, seen);
      merge_key(cfg, cmd, "--s-start", o->s_start, seen);
      merge_key(cfg, cmd, "--s-step", o->s_step, seen);
      merge_key(cfg, cmd, "--sigma-s", o->sigma_s, seen);
      merge_key(cfg, cmd, "--flat", o->flat, seen);
      merge_key(cfg, cmd, "--seeds", o->seeds, seen);
      merge_graph_opts(cfg, cmd, o->g, seen);
      merge_key(cfg, cmd, "--t", o->t, seen);
      merge_key(cfg, cmd, "--degree", o->degree, seen);
      merge_key(cfg, cmd, "--lambda", o->lambda, seen);
      merge_key(cfg, cmd, "--tol", o->tol, seen);
      merge_key(cfg, cmd, "--max-iter", o->max_iter, seen);
      merge_key(cfg, cmd, "--output", o->output, seen);
      reject_unknown(cfg, seen);
    }
    gs::require(!o->output.empty(), gs::errc::invalid_argument, "--output is required");

    gs::TimeSeriesConfig cfg;
    cfg.timepoints = o->timepoints;
    cfg.samples_per_time = o->samples;
    cfg.s_start = o->s_start;
    cfg.s_step = o->s_step;
    cfg.sigma_s = o->sigma_s;
    cfg.flat = o->flat;
    cfg.seeds = o->seeds;
    cfg.k = o->g.k;
    cfg.alpha = o->g.alpha;
    cfg.kind = gs::laplacian_kind_from_string(o->g.kind);
    cfg.t = o->t;
    cfg.degree = o->degree;
    cfg.lambda_dense = o->lambda;
    cfg.sinkhorn = {o->max_iter, o->tol};

    const gs::InterpResult res = gs::interpolation_benchmark(cfg);

    json out{{"config",
              {{"timepoints", o->timepoints},
               {"samples", o->samples},
               {"s_start", o->s_start},
               {"s_step", o->s_step},
               {"sigma_s", o->sigma_s},
               {"flat", o->flat},
               {"seeds", o->seeds},
               {"k", o->g.k},
               {"alpha", o->g.alpha},
               {"kind", o->g.kind},
               {"t", o->t},
               {"degree", o->degree},
               {"lambda", o->lambda},
               {"tol", o->tol},
               {"max_iter", o->max_iter}}}};
    for (const auto& [name, score] : res.mean_score) out["mean_w2"][name] = score;
    for (const auto& sr : res.per_seed) {
      json block{{"seed", sr.seed}};
      for (const auto& [name, scores] : sr.scores) block["w2"][name] = scores;
      out["seeds"].push_back(block);
    }
    write_json(o->output, out);
    for (const auto& [name, score] : res.mean_score)
      std::cout << name << ": mean_w2=" << score << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heat-kernel optimal transport on data-manifold graphs"};
  app.require_subcommand(1);
  auto threads = std::make_shared<int>(0);
  app.add_option("--threads", *threads, "cap worker threads (also GEOSINK_THREADS)");

  setup_cmd_graph(app, threads);
  setup_cmd_distance(app, threads);
  setup_cmd_barycenter(app, threads);
  setup_cmd_ebe(app, threads);
  setup_cmd_knn_bench(app, threads);
  setup_cmd_heat_study(app, threads);
  setup_cmd_interp(app, threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  } catch (const gs::Error& e) {
    std::cerr << e.what() << "\n";
    if (e.is_io()) return 2;
    return e.is_validation() ? 3 : 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
