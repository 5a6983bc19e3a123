#include "matchci/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "matchci/estimators.hpp"
#include "matchci/io.hpp"
#include "matchci/protocol.hpp"
#include "matchci/rng.hpp"
#include "matchci/roc.hpp"
#include "matchci/synthetic.hpp"
#include "matchci/version.hpp"
#include "matchci/wilson.hpp"

namespace matchci {

namespace {

using nlohmann::json;

// JSON has no non-finite numbers; they travel as strings.
json json_number(double value) {
  if (std::isfinite(value)) return value;
  if (std::isnan(value)) return "nan";
  return value > 0 ? "inf" : "-inf";
}

json interval_to_json(const IntervalResult& iv) {
  json diagnostics = json::object();
  for (const auto& [key, value] : iv.diagnostics) diagnostics[key] = json_number(value);
  return json{{"metric", metric_name(iv.metric)}, {"method", iv.method},
              {"point", json_number(iv.point)},  {"lower", json_number(iv.lower)},
              {"upper", json_number(iv.upper)},  {"alpha", iv.alpha},
              {"diagnostics", std::move(diagnostics)}};
}

struct InputOptions {
  std::string scores_path;
  std::string embeddings_path;
  bool similarity = false;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  auto* scores = cmd->add_option("--scores", in.scores_path,
                                 "Score CSV: id_a,instance_a,id_b,instance_b,score");
  auto* embeddings =
      cmd->add_option("--embeddings", in.embeddings_path, "Embedding CSV: id,instance,v0,...");
  scores->excludes(embeddings);
  embeddings->excludes(scores);
  cmd->add_flag("--similarity", in.similarity,
                "Scores are similarities (higher = more alike); negated internally");
}

json input_config(const InputOptions& in) {
  json config;
  config["input"] = in.scores_path.empty() ? in.embeddings_path : in.scores_path;
  config["input_kind"] = in.scores_path.empty() ? "embeddings" : "scores";
  config["similarity"] = in.similarity;
  return config;
}

MatchDataset load_dataset(const InputOptions& in) {
  if (!in.scores_path.empty()) {
    MatchDataset ds = read_score_csv(in.scores_path);
    if (in.similarity) ds.scores = -ds.scores;
    return ds;
  }
  if (in.embeddings_path.empty())
    throw PreconditionError("an input file is required: --scores or --embeddings");
  if (in.similarity)
    throw PreconditionError("--similarity applies to score input only");
  return read_embedding_csv(in.embeddings_path);
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value) {
  if (seed_opt->count() > 0) return flag_value;
  if (const char* env = std::getenv("MATCHCI_SEED")) {
    std::uint64_t value = 0;
    const char* end = env + std::string_view(env).size();
    const auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec != std::errc{} || ptr != end)
      throw PreconditionError("MATCHCI_SEED is not an unsigned integer: " +
                              std::string(env));
    return value;
  }
  return 0;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw PreconditionError("alpha must be in (0, 1)");
}

json base_doc(const char* command, std::uint64_t seed, json config) {
  return json{{"command", command},
              {"version", kVersion},
              {"seed", seed},
              {"config", std::move(config)}};
}

void emit(const json& doc, const std::string& output_path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  if (output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(output_path);
  if (!file) throw PreconditionError("cannot write output file: " + output_path);
  file << text;
}

bool is_bootstrap(const std::string& method) {
  return method == "subsets" || method == "two-level" || method == "vertex" ||
         method == "don";
}

void check_methods(const std::vector<std::string>& methods) {
  for (const std::string& method : methods)
    if (method != "wilson" && method != "naive-wilson" && !is_bootstrap(method))
      throw PreconditionError("unknown interval method: " + method);
}

BootstrapScheme scheme_from_name(const std::string& name) {
  if (name == "subsets") return BootstrapScheme::subsets;
  if (name == "two-level") return BootstrapScheme::two_level;
  if (name == "vertex") return BootstrapScheme::vertex;
  if (name == "don") return BootstrapScheme::double_or_nothing;
  throw PreconditionError("unknown bootstrap scheme: " + name);
}

std::pair<Metric, double> parse_target(const std::string& target) {
  const std::size_t eq = target.find('=');
  if (eq == std::string::npos)
    throw PreconditionError("target must look like far=1e-2 or frr=1e-3");
  const std::string name = target.substr(0, eq);
  const std::string rest = target.substr(eq + 1);
  Metric metric;
  if (name == "far")
    metric = Metric::far;
  else if (name == "frr")
    metric = Metric::frr;
  else
    throw PreconditionError("unknown target metric: " + name);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
  if (ec != std::errc{} || ptr != rest.data() + rest.size())
    throw PreconditionError("target rate is not a number: " + rest);
  return {metric, value};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Error-rate estimates and dependence-aware confidence intervals for "
               "1:1 matching"};
  app.require_subcommand(1);

  // ---- estimate ----
  auto* estimate = app.add_subcommand("estimate", "FRR/FAR point estimates");
  InputOptions est_in;
  add_input_options(estimate, est_in);
  double est_threshold = 0.0;
  estimate->add_option("--threshold", est_threshold, "Decision threshold")->required();
  std::string est_output;
  estimate->add_option("--output,-o", est_output, "Write JSON here instead of stdout");
  std::uint64_t est_seed = 0;
  auto* est_seed_opt = estimate->add_option("--seed", est_seed, "Seed (or MATCHCI_SEED)");
  int est_threads = 0;
  estimate->add_option("--threads", est_threads, "Worker threads (0 = all cores)");
  estimate->callback([&] {
    const std::uint64_t seed = resolve_seed(est_seed_opt, est_seed);
    const MatchDataset ds = load_dataset(est_in);
    const double t = est_in.similarity ? -est_threshold : est_threshold;
    const PairAggregates agg = aggregate_pairs(ds, t);
    const ErrorEstimate frr = estimate_frr(agg);
    const ErrorEstimate far = estimate_far(agg);
    json config = input_config(est_in);
    config["threshold"] = est_threshold;
    json doc = base_doc("estimate", seed, std::move(config));
    doc["results"] = {
        {"frr", {{"value", json_number(frr.value)}, {"comparisons", frr.n_effective_naive}}},
        {"far", {{"value", json_number(far.value)}, {"comparisons", far.n_effective_naive}}},
        {"counts",
         {{"identities", ds.g()},
          {"instances", ds.n_instances()},
          {"genuine_pairs", naive_genuine_pairs(agg)},
          {"impostor_pairs", naive_impostor_pairs(agg)}}},
        {"setting", agg.balanced ? "balanced" : "unbalanced"}};
    emit(doc, est_output, out);
  });

  // ---- ci ----
  auto* ci = app.add_subcommand("ci", "Confidence intervals for FRR/FAR");
  InputOptions ci_in;
  add_input_options(ci, ci_in);
  double ci_threshold = 0.0;
  ci->add_option("--threshold", ci_threshold, "Decision threshold")->required();
  std::string ci_metric = "frr";
  ci->add_option("--metric", ci_metric, "frr | far | both")
      ->check(CLI::IsMember({"frr", "far", "both"}));
  std::vector<std::string> ci_methods;
  ci->add_option("--methods", ci_methods,
                 "wilson | naive-wilson | subsets | two-level | vertex | don")
      ->required()
      ->delimiter(',');
  double ci_alpha = 0.05;
  ci->add_option("--alpha", ci_alpha, "Two-sided miscoverage level");
  int ci_b = 1000;
  ci->add_option("--b", ci_b, "Bootstrap replicates");
  std::string ci_output;
  ci->add_option("--output,-o", ci_output, "Write JSON here instead of stdout");
  std::uint64_t ci_seed = 0;
  auto* ci_seed_opt = ci->add_option("--seed", ci_seed, "Seed (or MATCHCI_SEED)");
  int ci_threads = 0;
  ci->add_option("--threads", ci_threads, "Worker threads (0 = all cores)");
  int ci_exit = 0;
  ci->callback([&] {
    check_alpha(ci_alpha);
    check_methods(ci_methods);
    bool any_bootstrap = false;
    for (const std::string& method : ci_methods) any_bootstrap |= is_bootstrap(method);
    if (any_bootstrap && ci_b < 100)
      throw PreconditionError("bootstrap methods need --b of at least 100");
    const std::uint64_t seed = resolve_seed(ci_seed_opt, ci_seed);
    const MatchDataset ds = load_dataset(ci_in);
    const double t = ci_in.similarity ? -ci_threshold : ci_threshold;
    const PairAggregates agg = aggregate_pairs(ds, t);

    std::vector<Metric> metrics;
    if (ci_metric == "frr" || ci_metric == "both") metrics.push_back(Metric::frr);
    if (ci_metric == "far" || ci_metric == "both") metrics.push_back(Metric::far);

    json intervals = json::array();
    json errors = json::array();
    std::uint64_t run_index = 0;
    int first_failure = 0;
    for (const Metric metric : metrics)
      for (const std::string& method : ci_methods) {
        const std::uint64_t child = derive_seed(seed, run_index++);
        try {
          intervals.push_back(interval_to_json(
              interval_by_method(method, agg, metric, ci_alpha, ci_b, child, ci_threads)));
        } catch (const PreconditionError& e) {
          errors.push_back({{"metric", metric_name(metric)},
                            {"method", method},
                            {"error", "precondition"},
                            {"message", e.what()}});
          if (first_failure == 0) first_failure = 3;
        } catch (const ResamplingError& e) {
          errors.push_back({{"metric", metric_name(metric)},
                            {"method", method},
                            {"error", "resampling"},
                            {"message", e.what()}});
          if (first_failure == 0) first_failure = 4;
        }
      }
    json config = input_config(ci_in);
    config["threshold"] = ci_threshold;
    config["metric"] = ci_metric;
    config["methods"] = ci_methods;
    config["alpha"] = ci_alpha;
    config["b"] = ci_b;
    json doc = base_doc("ci", seed, std::move(config));
    doc["intervals"] = std::move(intervals);
    doc["errors"] = std::move(errors);
    emit(doc, ci_output, out);
    ci_exit = doc["intervals"].empty() ? first_failure : 0;
  });

  // ---- roc ----
  auto* roc = app.add_subcommand("roc", "FRR interval at a target FAR on the ROC curve");
  InputOptions roc_in;
  add_input_options(roc, roc_in);
  double roc_target = 0.0;
  roc->add_option("--target-far", roc_target, "Target false acceptance rate")->required();
  double roc_alpha = 0.05;
  roc->add_option("--alpha", roc_alpha, "Two-sided miscoverage level");
  double roc_alpha_far = -1.0;
  auto* roc_alpha_far_opt =
      roc->add_option("--alpha-far", roc_alpha_far, "Level spent on the FAR band "
                                                    "(parametric method; default alpha)");
  std::string roc_method = "parametric";
  roc->add_option("--method", roc_method, "parametric | bootstrap")
      ->check(CLI::IsMember({"parametric", "bootstrap"}));
  std::string roc_scheme = "vertex";
  roc->add_option("--scheme", roc_scheme, "Bootstrap scheme: subsets | vertex | don");
  int roc_b = 1000;
  roc->add_option("--b", roc_b, "Bootstrap replicates");
  std::string roc_csv;
  roc->add_option("--roc-csv", roc_csv, "Also write the empirical curve as CSV here");
  std::string roc_output;
  roc->add_option("--output,-o", roc_output, "Write JSON here instead of stdout");
  std::uint64_t roc_seed = 0;
  auto* roc_seed_opt = roc->add_option("--seed", roc_seed, "Seed (or MATCHCI_SEED)");
  int roc_threads = 0;
  roc->add_option("--threads", roc_threads, "Worker threads (0 = all cores)");
  roc->callback([&] {
    check_alpha(roc_alpha);
    const std::uint64_t seed = resolve_seed(roc_seed_opt, roc_seed);
    const MatchDataset ds = load_dataset(roc_in);
    const double alpha_far = roc_alpha_far_opt->count() > 0 ? roc_alpha_far : roc_alpha;

    RocPointInterval result =
        roc_method == "bootstrap"
            ? roc_interval_bootstrap(ds, roc_target, roc_alpha,
                                     scheme_from_name(roc_scheme), roc_b, seed,
                                     roc_threads)
            : roc_interval_parametric(ds, roc_target, roc_alpha, alpha_far);

    // report thresholds in the orientation the scores came in
    const auto user_threshold = [&](double t) { return roc_in.similarity ? -t : t; };
    json interval = interval_to_json(result.interval);
    if (roc_in.similarity) {
      for (const char* key : {"threshold_lower", "threshold_point", "threshold_upper"}) {
        auto& diag = interval["diagnostics"];
        if (diag.contains(key) && diag[key].is_number())
          diag[key] = json_number(-diag[key].get<double>());
      }
    }
    json config = input_config(roc_in);
    config["target_far"] = roc_target;
    config["alpha"] = roc_alpha;
    config["method"] = roc_method;
    if (roc_method == "bootstrap") {
      config["scheme"] = roc_scheme;
      config["b"] = roc_b;
    } else {
      config["alpha_far"] = alpha_far;
    }
    json doc = base_doc("roc", seed, std::move(config));
    doc["result"] = {{"target_far", result.target_far},
                     {"threshold_used", json_number(user_threshold(result.threshold_used))},
                     {"method", result.method},
                     {"alpha_far", json_number(result.alpha_far)},
                     {"interval", std::move(interval)}};
    if (!roc_csv.empty()) {
      EmpiricalRoc curve = empirical_roc(ds);
      if (roc_in.similarity) curve.thresholds = -curve.thresholds;
      std::ofstream file(roc_csv);
      if (!file) throw PreconditionError("cannot write ROC CSV: " + roc_csv);
      write_roc_csv(curve, file);
      doc["roc_csv"] = roc_csv;
    }
    emit(doc, roc_output, out);
  });

  // ---- protocol ----
  auto* protocol = app.add_subcommand("protocol", "Budget-constrained comparison plans");
  std::string protocol_metric = "far";
  protocol->add_option("--metric", protocol_metric, "far | frr")
      ->check(CLI::IsMember({"far", "frr"}));
  std::int64_t protocol_budget = 0;
  protocol->add_option("--budget", protocol_budget, "Number of comparisons")->required();
  std::vector<int> protocol_counts;
  auto* counts_opt = protocol->add_option("--counts", protocol_counts,
                                          "Instances per identity, comma separated");
  counts_opt->delimiter(',');
  int protocol_g = 0;
  auto* g_opt = protocol->add_option("--g", protocol_g, "Identity count (with --m)");
  int protocol_m = 0;
  auto* m_opt = protocol->add_option("--m", protocol_m, "Instances per identity (with --g)");
  g_opt->excludes(counts_opt);
  m_opt->excludes(counts_opt);
  std::string protocol_csv;
  protocol->add_option("--csv", protocol_csv, "Also write the plan as CSV here");
  std::string protocol_output;
  protocol->add_option("--output,-o", protocol_output, "Write JSON here instead of stdout");
  std::uint64_t protocol_seed = 0;
  auto* protocol_seed_opt =
      protocol->add_option("--seed", protocol_seed, "Seed (or MATCHCI_SEED)");
  int protocol_threads = 0;
  protocol->add_option("--threads", protocol_threads, "Worker threads (0 = all cores)");
  protocol->callback([&] {
    const std::uint64_t seed = resolve_seed(protocol_seed_opt, protocol_seed);
    std::vector<int> counts = protocol_counts;
    if (counts.empty()) {
      if (protocol_g < 1 || protocol_m < 1)
        throw PreconditionError("give --counts, or both --g and --m");
      counts.assign(static_cast<std::size_t>(protocol_g), protocol_m);
    }
    const ProtocolPlan plan = protocol_metric == "far"
                                  ? plan_far_protocol(counts, protocol_budget)
                                  : plan_frr_protocol(counts, protocol_budget);
    json selections = json::array();
    for (const ProtocolSelection& s : plan.selections)
      selections.push_back({{"iteration", s.iteration},
                            {"id_a", s.id_a + 1},
                            {"instance_a", s.inst_a + 1},
                            {"id_b", s.id_b + 1},
                            {"instance_b", s.inst_b + 1}});
    json config{{"metric", protocol_metric},
                {"budget", protocol_budget},
                {"counts", counts}};
    json doc = base_doc("protocol", seed, std::move(config));
    doc["plan"] = {{"objective_value", plan.objective_value},
                   {"truncated", plan.truncated},
                   {"selections", std::move(selections)}};
    if (!protocol_csv.empty()) {
      std::ofstream file(protocol_csv);
      if (!file) throw PreconditionError("cannot write plan CSV: " + protocol_csv);
      write_protocol_csv(plan, file);
      doc["plan_csv"] = protocol_csv;
    }
    emit(doc, protocol_output, out);
  });

  // ---- simulate ----
  auto* simulate = app.add_subcommand("simulate", "Synthetic coverage benchmark");
  SyntheticConfig sim_config;
  simulate->add_option("--g", sim_config.g, "Identities per replication");
  simulate->add_option("--m", sim_config.m, "Instances per identity");
  simulate->add_option("--dim", sim_config.dim, "Embedding dimension");
  simulate->add_option("--beta-scale", sim_config.beta_scale,
                       "Rate of the exponential identity effect");
  simulate->add_option("--noise-param", sim_config.noise_second_param,
                       "Noise second parameter");
  std::string sim_noise = "variance";
  simulate->add_option("--noise-interpretation", sim_noise, "variance | stddev")
      ->check(CLI::IsMember({"variance", "stddev"}));
  std::string sim_target;
  simulate->add_option("--target", sim_target, "Metric and rate, e.g. far=1e-2")
      ->required();
  std::vector<std::string> sim_methods;
  simulate->add_option("--methods", sim_methods,
                       "wilson | naive-wilson | subsets | two-level | vertex | don")
      ->required()
      ->delimiter(',');
  std::int64_t sim_r = 100;
  simulate->add_option("--r", sim_r, "Replications");
  double sim_alpha = 0.05;
  simulate->add_option("--alpha", sim_alpha, "Two-sided miscoverage level");
  int sim_b = 1000;
  simulate->add_option("--b", sim_b, "Bootstrap replicates");
  int sim_calib_g = 200;
  simulate->add_option("--calib-g", sim_calib_g, "Calibration identities");
  int sim_calib_m = 10;
  simulate->add_option("--calib-m", sim_calib_m, "Calibration instances per identity");
  std::string sim_output;
  simulate->add_option("--output,-o", sim_output, "Write JSON here instead of stdout");
  std::uint64_t sim_seed = 0;
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Seed (or MATCHCI_SEED)");
  int sim_threads = 0;
  simulate->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");
  simulate->callback([&] {
    check_alpha(sim_alpha);
    check_methods(sim_methods);
    sim_config.noise_interpretation =
        sim_noise == "stddev" ? NoiseParam::stddev : NoiseParam::variance;
    sim_config.seed = resolve_seed(sim_seed_opt, sim_seed);
    const auto [metric, target_value] = parse_target(sim_target);
    const Calibration cal =
        calibrate_threshold(sim_config, metric, target_value, sim_calib_g, sim_calib_m);
    const CoverageReport report =
        run_coverage_experiment(sim_config, cal.threshold, metric, cal.achieved,
                                sim_methods, sim_alpha, sim_r, sim_b, sim_threads);
    json methods = json::array();
    for (const MethodCoverage& mc : report.methods)
      methods.push_back({{"method", mc.method},
                         {"replications", mc.replications},
                         {"hits", mc.hits},
                         {"failures", mc.failures},
                         {"coverage", json_number(mc.coverage)},
                         {"coverage_ci", {json_number(mc.coverage_lower),
                                          json_number(mc.coverage_upper)}},
                         {"mean_width", json_number(mc.mean_width)}});
    json config{{"g", sim_config.g},
                {"m", sim_config.m},
                {"dim", sim_config.dim},
                {"beta_scale", sim_config.beta_scale},
                {"noise_param", sim_config.noise_second_param},
                {"noise_interpretation", sim_noise},
                {"target", sim_target},
                {"methods", sim_methods},
                {"alpha", sim_alpha},
                {"b", sim_b},
                {"r", sim_r},
                {"calib_g", sim_calib_g},
                {"calib_m", sim_calib_m}};
    json doc = base_doc("simulate", sim_config.seed, std::move(config));
    doc["calibration"] = {{"metric", metric_name(cal.metric)},
                          {"target", cal.target},
                          {"threshold", json_number(cal.threshold)},
                          {"achieved", json_number(cal.achieved)},
                          {"exact", cal.exact}};
    doc["report"] = {{"truth", json_number(report.truth)},
                     {"alpha", report.alpha},
                     {"replications", report.replications},
                     {"b", report.bootstrap_b},
                     {"methods", std::move(methods)}};
    emit(doc, sim_output, out);
  });

  try {
    std::vector<const char*> argv;
    argv.push_back("matchci");
    for (const std::string& arg : args) argv.push_back(arg.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
    return ci_exit;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);  // prints the message; the exit code policy is ours
    return 3;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const ResamplingError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace matchci
