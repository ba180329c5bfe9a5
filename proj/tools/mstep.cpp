#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/core/pomdp_io.hpp"
#include "mstep/core/rng.hpp"
#include "mstep/environments/environments.hpp"
#include "mstep/harness/harness.hpp"
#include "mstep/oracle/class_io.hpp"
#include "mstep/oracle/moment_matching.hpp"
#include "mstep/oracle/oracle.hpp"

using nlohmann::ordered_json;
using namespace mstep;

namespace {

struct EnvOptions {
  std::string kind;
  int m = 2;
  int A = 2;
  int s = 3;
  int S = 3;
  int O = 3;
  int H = 4;
  std::uint64_t seed = 0;
  int max_retries = 10000;
  std::string out;
};

struct ClassOptions {
  std::string env;
  std::string kind = "decoys";
  int decoys = 3;
  std::uint64_t seed = 0;
  std::string out;
};

struct RunOptions {
  std::string env;
  std::string cls;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::uint64_t> master_seed;
  std::string out;
  std::string config;
  // mgolf
  int K = 200;
  std::optional<int> K_est;
  std::optional<double> beta;
  double beta_c = 1.0;
  double epsilon = 0.1;
  double delta = 0.1;
  bool doubling = false;
  // ucbvi
  std::optional<int> m;
  double bonus_scale = 1.0;
  // isrl
  std::string mode = "fixed-chain";
  std::optional<int> N;
  // olive
  double eps_act = 0.125;
  double eps_elim = 0.125;
  int n_est = 400;
  bool exact = false;
};

struct AnalyzeOptions {
  std::string env;
  std::string cls;
  int step = 2;
  double tol = 1e-8;
  int policies = 50;
  std::uint64_t seed = 0;
  std::string out;
};

ordered_json env_ref(const std::string& path) { return {{"file", path}}; }

void add_common_run(CLI::App* cmd, RunOptions& o, bool needs_class) {
  cmd->add_option("--env", o.env, "environment file")->required();
  if (needs_class) cmd->add_option("--class", o.cls, "function class file")->required();
  cmd->add_option("--seed", o.seeds, "seed list")->delimiter(',');
  cmd->add_option("--master-seed", o.master_seed, "master seed for derived per-run seeds");
  cmd->add_option("--out", o.out, "output CSV path")->required();
}

int run_config(const ExperimentConfig& config) {
  const auto record = run_experiment(config);
  std::cout << "wrote " << record.csv_path.string() << " (" << record.table.rows.size()
            << " rows)\n";
  return 0;
}

ExperimentConfig base_config(const RunOptions& o, const std::string& algorithm, ordered_json params) {
  ordered_json doc;
  doc["env"] = env_ref(o.env);
  if (!o.cls.empty()) doc["class"] = env_ref(o.cls);
  doc["algorithm"] = algorithm;
  doc["params"] = std::move(params);
  doc["seeds"] = o.seeds;
  doc["output"] = o.out;
  if (o.master_seed) doc["master_seed"] = *o.master_seed;
  return ExperimentConfig::from_json(doc, ".");
}

void print_json(const ordered_json& doc, const std::string& out) {
  const std::string text = doc.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_decimal(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

ordered_json rank_json(const RankResult& r) {
  ordered_json sv = ordered_json::array();
  for (double v : r.singular_values) sv.push_back(format_decimal(v));
  return {{"rank", r.numerical_rank}, {"singular_values", sv}};
}

std::vector<PolicyPtr> greedy_policies(const FunctionClassPair& classes) {
  std::vector<PolicyPtr> out;
  for (const auto& f : classes.F) out.push_back(std::make_shared<GreedyPolicy>(f));
  return out;
}

void check_step(const ModelOracle& oracle, int h) {
  if (h < 1 || h > oracle.horizon()) throw ConfigError("--step must lie in [1, H]");
}

int analyze_rank(const AnalyzeOptions& o) {
  const ModelOracle oracle(load_pomdp(o.env));
  const auto classes = load_class(o.cls);
  check_step(oracle, o.step);
  const auto policies = greedy_policies(classes);
  ordered_json doc;
  doc["step"] = o.step;
  doc["tol"] = o.tol;
  doc["bellman"] = rank_json(bellman_rank(oracle, policies, classes.F, o.step, o.tol, false));
  doc["surrogate"] = rank_json(bellman_rank(oracle, policies, classes.F, o.step, o.tol, true));
  doc["state_count"] = oracle.model().state_count;
  print_json(doc, o.out);
  return 0;
}

int analyze_bellman_error(const AnalyzeOptions& o) {
  const ModelOracle oracle(load_pomdp(o.env));
  const auto classes = load_class(o.cls);
  check_step(oracle, o.step);
  const auto policies = greedy_policies(classes);
  ordered_json doc;
  doc["step"] = o.step;
  doc["bellman"] = matrix_json(bellman_error_matrix(oracle, policies, classes.F, o.step, false));
  doc["surrogate"] = matrix_json(bellman_error_matrix(oracle, policies, classes.F, o.step, true));
  print_json(doc, o.out);
  return 0;
}

int analyze_moment_matching(const AnalyzeOptions& o) {
  const ModelOracle oracle(load_pomdp(o.env));
  const SuffixSpace space = oracle.space();
  Rng rng(o.seed);
  double item1 = 0.0;
  double item2 = 0.0;
  std::uint64_t fallbacks = 0;
  for (int p = 0; p < o.policies; ++p) {
    const SuffixPolicy pi = SuffixPolicy::random_deterministic(space, rng);
    const SuffixPolicy rollin = SuffixPolicy::random_deterministic(space, rng);
    for (int h = 1; h <= oracle.horizon(); ++h) {
      const MomentMatchingPolicy nu(oracle, pi, h);
      const auto mixed = compose(borrow(pi), borrow(nu), nu.start());
      const auto lhs = oracle.suffix_distribution(pi, h);
      const auto rhs = oracle.suffix_distribution(*mixed, h);
      for (SuffixCode z : oracle.reachable_suffixes(h)) {
        const auto a = lhs.find(z);
        const auto b = rhs.find(z);
        const double pa = a == lhs.end() ? 0.0 : a->second;
        const double pb = b == rhs.end() ? 0.0 : b->second;
        item1 = std::max(item1, std::abs(pa - pb));
      }
      std::vector<double> g(space.size(h));
      for (double& v : g) v = rng.uniform();
      const auto gf = [&](SuffixCode z) { return g[z]; };
      const auto tilde = compose(borrow(rollin), borrow(nu), nu.start());
      double direct = 0.0;
      for (const auto& [z, prob] : oracle.suffix_distribution(*tilde, h)) direct += prob * g[z];
      const auto fac = factorize(oracle, rollin, nu, gf);
      item2 = std::max(item2, std::abs(direct - fac.value()));
      fallbacks += nu.fallbacks();
    }
  }
  ordered_json doc;
  doc["policies"] = o.policies;
  doc["item1_max_deviation"] = format_decimal(item1);
  doc["item2_max_deviation"] = format_decimal(item2);
  doc["fallbacks"] = fallbacks;
  print_json(doc, o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workbench for m-step decodable POMDPs. MSTEP_ORACLE_CAP overrides the exact "
               "enumeration cap (default 10000000)."};
  app.set_version_flag("--version", std::string(library_version()));
  app.require_subcommand(1);

  auto* env = app.add_subcommand("env", "build environments and function classes");
  env->require_subcommand(1);
  EnvOptions eo;
  auto* build = env->add_subcommand("build", "build a built-in environment");
  build->add_option("--kind", eo.kind, "lock | hadamard | random")
      ->required()
      ->check(CLI::IsMember({"lock", "hadamard", "random"}));
  build->add_option("--m", eo.m, "memory length (lock, random)");
  build->add_option("--A", eo.A, "action count (lock, random)");
  build->add_option("--s", eo.s, "Hadamard order: O = 2^s");
  build->add_option("--S", eo.S, "state count (random)");
  build->add_option("--O", eo.O, "observation count (random)");
  build->add_option("--H", eo.H, "horizon (random)");
  build->add_option("--seed", eo.seed, "generator seed (random)");
  build->add_option("--max-retries", eo.max_retries, "rejection-sampling budget (random)");
  build->add_option("--out", eo.out, "output file")->required();

  ClassOptions co;
  auto* cls = env->add_subcommand("class", "build a function class for an environment");
  cls->add_option("--env", co.env, "environment file")->required();
  cls->add_option("--kind", co.kind, "decoys | hadamard")->check(CLI::IsMember({"decoys", "hadamard"}));
  cls->add_option("--decoys", co.decoys, "number of decoy functions");
  cls->add_option("--s", eo.s, "Hadamard order (hadamard kind)");
  cls->add_option("--seed", co.seed, "decoy seed");
  cls->add_option("--out", co.out, "output file")->required();

  std::string verify_env;
  int verify_m = 0;
  auto* verify = app.add_subcommand("verify", "check m-step decodability exactly");
  verify->add_option("--env", verify_env, "environment file")->required();
  verify->add_option("--m", verify_m, "memory length (default: the file's m)");

  auto* run = app.add_subcommand("run", "run a learning algorithm");
  run->require_subcommand(1);
  RunOptions ro;
  auto* mgolf = run->add_subcommand("mgolf", "m-GOLF");
  add_common_run(mgolf, ro, true);
  mgolf->add_option("--K", ro.K, "epochs");
  mgolf->add_option("--K-est", ro.K_est, "episodes per epoch and step");
  mgolf->add_option("--beta", ro.beta, "confidence radius (overrides --beta-c)");
  mgolf->add_option("--beta-c", ro.beta_c, "constant in the default radius");
  mgolf->add_option("--epsilon", ro.epsilon, "target accuracy");
  mgolf->add_option("--delta", ro.delta, "failure probability");
  mgolf->add_flag("--doubling", ro.doubling, "double beta when the confidence set empties");

  auto* ucbvi = run->add_subcommand("ucbvi", "UCB-VI on the megastate MDP");
  add_common_run(ucbvi, ro, false);
  ucbvi->add_option("--m", ro.m, "memory length (default: the file's m)");
  ucbvi->add_option("--K", ro.K, "episodes")->default_val(5000);
  ucbvi->add_option("--delta", ro.delta, "failure probability");
  ucbvi->add_option("--bonus-scale", ro.bonus_scale, "bonus multiplier");

  auto* isrl = run->add_subcommand("isrl", "importance-sampling policy selection");
  add_common_run(isrl, ro, false);
  isrl->add_option("--class", ro.cls, "function class file (explicit mode)");
  isrl->add_option("--mode", ro.mode, "fixed-chain | full | explicit")
      ->check(CLI::IsMember({"fixed-chain", "full", "explicit"}));
  isrl->add_option("--N", ro.N, "sample count (default from epsilon, delta)");
  isrl->add_option("--epsilon", ro.epsilon, "target accuracy");
  isrl->add_option("--delta", ro.delta, "failure probability");

  auto* olive = run->add_subcommand("olive", "OLIVE baseline");
  add_common_run(olive, ro, true);
  olive->add_option("--eps-act", ro.eps_act, "activation threshold");
  olive->add_option("--eps-elim", ro.eps_elim, "elimination threshold");
  olive->add_option("--n-est", ro.n_est, "episodes per estimate");
  olive->add_flag("--exact", ro.exact, "use exact oracle expectations");

  auto* runcfg = run->add_subcommand("config", "run a JSON experiment config");
  runcfg->add_option("config", ro.config, "config file")->required();

  auto* analyze = app.add_subcommand("analyze", "exact structural checks");
  analyze->require_subcommand(1);
  AnalyzeOptions ao;
  auto* rank = analyze->add_subcommand("rank", "numerical rank of Bellman error matrices");
  rank->add_option("--env", ao.env, "environment file")->required();
  rank->add_option("--class", ao.cls, "function class file")->required();
  rank->add_option("--step", ao.step, "step h");
  rank->add_option("--tol", ao.tol, "relative singular-value tolerance");
  rank->add_option("--out", ao.out, "output JSON (default stdout)");
  auto* mm = analyze->add_subcommand("moment-matching", "moment-matching identities");
  mm->add_option("--env", ao.env, "environment file")->required();
  mm->add_option("--policies", ao.policies, "sampled deterministic policies");
  mm->add_option("--seed", ao.seed, "sampling seed");
  mm->add_option("--out", ao.out, "output JSON (default stdout)");
  auto* be = analyze->add_subcommand("bellman-error", "Bellman error matrices");
  be->add_option("--env", ao.env, "environment file")->required();
  be->add_option("--class", ao.cls, "function class file")->required();
  be->add_option("--step", ao.step, "step h");
  be->add_option("--out", ao.out, "output JSON (default stdout)");

  std::string sweep_file;
  std::optional<int> parallelism;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a sweep file");
  sweep_cmd->add_option("config", sweep_file, "sweep file")->required();
  sweep_cmd->add_option("--parallelism", parallelism, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (build->parsed()) {
      Pomdp pomdp;
      if (eo.kind == "lock") pomdp = make_combination_lock(eo.m, eo.A);
      if (eo.kind == "hadamard") pomdp = make_hadamard_instance(eo.s).pomdp;
      if (eo.kind == "random")
        pomdp = make_random_decodable(eo.S, eo.O, eo.A, eo.H, eo.m, eo.seed, eo.max_retries);
      save_pomdp(pomdp, eo.out);
      return 0;
    }
    if (cls->parsed()) {
      if (co.kind == "hadamard") {
        save_class(make_hadamard_instance(eo.s).classes, co.out);
      } else {
        const ModelOracle oracle(load_pomdp(co.env));
        save_class(make_decoy_class(oracle, co.decoys, co.seed), co.out);
      }
      return 0;
    }
    if (verify->parsed()) {
      const Pomdp pomdp = load_pomdp(verify_env);
      const int m = verify_m > 0 ? verify_m : pomdp.memory;
      const auto result = verify_decodability(pomdp, m);
      ordered_json doc;
      doc["m"] = m;
      doc["decodable"] = result.decodable;
      if (result.witness) {
        doc["witness"] = result.witness->to_string();
        doc["witness_states"] = result.witness_states;
      }
      print_json(doc, "");
      return 0;
    }
    if (mgolf->parsed()) {
      ordered_json p;
      p["K"] = ro.K;
      if (ro.K_est) p["K_est"] = *ro.K_est;
      if (ro.beta) p["beta"] = *ro.beta;
      p["beta_c"] = ro.beta_c;
      p["epsilon"] = ro.epsilon;
      p["delta"] = ro.delta;
      p["doubling"] = ro.doubling;
      return run_config(base_config(ro, "mgolf", p));
    }
    if (ucbvi->parsed()) {
      ordered_json p;
      p["K"] = ro.K;
      p["delta"] = ro.delta;
      p["bonus_scale"] = ro.bonus_scale;
      if (ro.m) p["m"] = *ro.m;
      return run_config(base_config(ro, "ucbvi", p));
    }
    if (isrl->parsed()) {
      ordered_json p;
      p["mode"] = ro.mode;
      if (ro.N) p["N"] = *ro.N;
      p["epsilon"] = ro.epsilon;
      p["delta"] = ro.delta;
      return run_config(base_config(ro, "isrl", p));
    }
    if (olive->parsed()) {
      ordered_json p;
      p["eps_act"] = ro.eps_act;
      p["eps_elim"] = ro.eps_elim;
      p["n_est"] = ro.n_est;
      p["exact"] = ro.exact;
      return run_config(base_config(ro, "olive", p));
    }
    if (runcfg->parsed()) return run_config(ExperimentConfig::load(ro.config));
    if (rank->parsed()) return analyze_rank(ao);
    if (mm->parsed()) return analyze_moment_matching(ao);
    if (be->parsed()) return analyze_bellman_error(ao);
    if (sweep_cmd->parsed()) {
      const auto result = run_sweep_file(sweep_file, parallelism);
      std::cout << result.table.rows.size() << " rows, " << result.failures.size()
                << " failed configs\n";
      return result.failures.empty() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
