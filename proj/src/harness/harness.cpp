#include "mstep/harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "mstep/core/decodability.hpp"
#include "mstep/core/errors.hpp"
#include "mstep/core/pomdp_io.hpp"
#include "mstep/core/simulate.hpp"
#include "mstep/environments/environments.hpp"
#include "mstep/isrl/isrl.hpp"
#include "mstep/megastate/megastate.hpp"
#include "mstep/mgolf/mgolf.hpp"
#include "mstep/olive/olive.hpp"
#include "mstep/oracle/class_io.hpp"
#include "mstep/oracle/oracle.hpp"

#ifndef MSTEP_VERSION
#define MSTEP_VERSION "0.0.0"
#endif

namespace mstep {

using nlohmann::ordered_json;

const char* library_version() { return MSTEP_VERSION; }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const ordered_json& obj, const char* key, T fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <typename T>
T require(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  return get_or<T>(obj, key, T{}, where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::unique_ptr<ModelOracle> try_oracle(const Pomdp& pomdp) {
  try {
    return std::make_unique<ModelOracle>(pomdp);
  } catch (const CapExceeded&) {
    return nullptr;
  }
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- algorithm runners -------------------------------------------------------------------

struct RunContext {
  const ExperimentConfig& config;
  const Pomdp& pomdp;
};

const std::vector<std::string> kMgolfColumns{"epoch", "optimistic_value", "confset_size",
                                              "episodes_used", "exact_gap", "seed"};
const std::vector<std::string> kUcbviColumns{"episode", "policy_value", "gap",
                                             "cumulative_regret", "seed"};
const std::vector<std::string> kIsrlColumns{"policy_index", "estimate", "exact_value", "selected",
                                            "seed"};
const std::vector<std::string> kOliveColumns{"round", "selected", "estimated_value",
                                             "violating_step", "eliminated", "survivors",
                                             "episodes_used", "exact_gap", "seed"};

void run_mgolf_rows(const RunContext& ctx, const FunctionClassPair& classes,
                    const ModelOracle* oracle, std::uint64_t seed, CsvTable& table) {
  const auto& p = ctx.config.params;
  const std::string where = "mgolf params";
  check_keys(p, {"K", "K_est", "beta", "beta_c", "epsilon", "delta", "doubling"}, where);
  MGolfConfig cfg;
  cfg.epochs = get_or<int>(p, "K", cfg.epochs, where);
  if (p.contains("K_est")) cfg.k_est = get_or<int>(p, "K_est", 1, where);
  if (p.contains("beta")) cfg.beta = get_or<double>(p, "beta", 0.0, where);
  cfg.beta_c = get_or<double>(p, "beta_c", cfg.beta_c, where);
  cfg.epsilon = get_or<double>(p, "epsilon", cfg.epsilon, where);
  cfg.delta = get_or<double>(p, "delta", cfg.delta, where);
  cfg.doubling = get_or<bool>(p, "doubling", cfg.doubling, where);
  cfg.state_count = ctx.pomdp.state_count;
  cfg.seed = seed;
  const EpisodeSampler sampler(ctx.pomdp);
  const auto result = run_mgolf(sampler, classes, cfg, oracle);
  for (const auto& e : result.epochs) {
    table.rows.push_back({csv_number(e.epoch), csv_number(e.optimistic_value),
                          csv_number(static_cast<std::uint64_t>(e.confset_size)),
                          csv_number(e.episodes_used), csv_number(e.exact_gap), csv_number(seed)});
  }
}

void run_ucbvi_rows(const RunContext& ctx, std::uint64_t seed, CsvTable& table) {
  const auto& p = ctx.config.params;
  const std::string where = "ucbvi params";
  check_keys(p, {"K", "delta", "bonus_scale", "m"}, where);
  UcbviConfig cfg;
  cfg.episodes = get_or<int>(p, "K", cfg.episodes, where);
  cfg.delta = get_or<double>(p, "delta", cfg.delta, where);
  cfg.bonus_scale = get_or<double>(p, "bonus_scale", cfg.bonus_scale, where);
  cfg.seed = seed;
  const int m = get_or<int>(p, "m", ctx.pomdp.memory, where);
  Pomdp model = ctx.pomdp;
  if (m < 1 || m > model.horizon) throw ConfigError("ucbvi: m must lie in [1, H]");
  model.memory = m;
  model.decoder.reset();
  const auto mdp = build_megastate_mdp(model, m);
  const EpisodeSampler sampler(model);
  const auto result = ucbvi_learn(mdp, sampler, cfg);
  for (const auto& e : result.curve) {
    table.rows.push_back({csv_number(e.episode), csv_number(e.policy_value), csv_number(e.gap),
                          csv_number(e.cumulative_regret), csv_number(seed)});
  }
}

void run_isrl_rows(const RunContext& ctx, const FunctionClassPair* classes,
                   const ModelOracle* oracle, std::uint64_t seed, CsvTable& table) {
  const auto& p = ctx.config.params;
  const std::string where = "isrl params";
  check_keys(p, {"mode", "N", "epsilon", "delta"}, where);
  const std::string mode = get_or<std::string>(p, "mode", "fixed-chain", where);
  const double eps = get_or<double>(p, "epsilon", 0.1, where);
  const double delta = get_or<double>(p, "delta", 0.1, where);
  Pomdp model = ctx.pomdp;
  if (!model.decoder) {
    auto verdict = verify_decodability(model, model.memory);
    if (!verdict.decodable) throw ModelError("isrl: environment is not decodable");
    model.decoder = std::move(verdict.decoder);
  }
  std::vector<PolicyPtr> policies;
  if (mode == "fixed-chain" || mode == "full") {
    const auto m = mode == "full" ? PolicyClassMode::full : PolicyClassMode::fixed_chain;
    for (auto& pi : enumerate_policy_class(model, m, oracle_cap())) policies.push_back(pi);
  } else if (mode == "explicit") {
    if (!classes) throw ConfigError("isrl explicit mode needs a function class");
    for (const auto& f : classes->F) policies.push_back(std::make_shared<GreedyPolicy>(f));
  } else {
    throw ConfigError("isrl mode must be fixed-chain, full or explicit");
  }
  const int N = get_or<int>(
      p, "N",
      isrl_sample_size(model.horizon, model.action_count, static_cast<double>(policies.size()), eps, delta),
      where);
  const EpisodeSampler sampler(model);
  const auto result = is_rl(sampler, policies, N, seed);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const double exact = oracle ? oracle->policy_value(*policies[i]) : std::nan("");
    table.rows.push_back({csv_number(static_cast<std::uint64_t>(i)), csv_number(result.estimates[i]),
                          csv_number(exact), static_cast<int>(i) == result.best ? "1" : "0",
                          csv_number(seed)});
  }
}

void run_olive_rows(const RunContext& ctx, const FunctionClassPair& classes,
                    const ModelOracle* oracle, std::uint64_t seed, CsvTable& table) {
  const auto& p = ctx.config.params;
  const std::string where = "olive params";
  check_keys(p, {"eps_act", "eps_elim", "n_est", "exact", "max_rounds"}, where);
  OliveConfig cfg;
  cfg.eps_act = get_or<double>(p, "eps_act", cfg.eps_act, where);
  cfg.eps_elim = get_or<double>(p, "eps_elim", cfg.eps_elim, where);
  cfg.n_est = get_or<int>(p, "n_est", cfg.n_est, where);
  cfg.exact = get_or<bool>(p, "exact", cfg.exact, where);
  cfg.max_rounds = get_or<int>(p, "max_rounds", cfg.max_rounds, where);
  cfg.seed = seed;
  const EpisodeSampler sampler(ctx.pomdp);
  const auto result = run_olive(sampler, classes.F, cfg, oracle);
  for (const auto& r : result.history) {
    std::string elim;
    for (std::size_t i = 0; i < r.eliminated.size(); ++i) {
      if (i > 0) elim += ';';
      elim += std::to_string(r.eliminated[i]);
    }
    table.rows.push_back({csv_number(r.round), csv_number(r.selected),
                          csv_number(r.estimated_value), csv_number(r.violating_step), elim,
                          csv_number(static_cast<std::uint64_t>(r.survivors)),
                          csv_number(r.episodes_after), csv_number(r.exact_gap), csv_number(seed)});
  }
}

}  // namespace

Pomdp build_environment(const ordered_json& spec, const std::filesystem::path& base_dir) {
  const std::string where = "env";
  if (!spec.is_object()) throw ConfigError("env must be an object");
  if (spec.contains("file")) {
    check_keys(spec, {"file"}, where);
    return load_pomdp(resolve(base_dir, require<std::string>(spec, "file", where)));
  }
  const std::string kind = require<std::string>(spec, "kind", where);
  try {
    if (kind == "lock") {
      check_keys(spec, {"kind", "m", "A"}, where);
      return make_combination_lock(require<int>(spec, "m", where), require<int>(spec, "A", where));
    }
    if (kind == "hadamard") {
      check_keys(spec, {"kind", "s"}, where);
      return make_hadamard_instance(require<int>(spec, "s", where)).pomdp;
    }
    if (kind == "random") {
      check_keys(spec, {"kind", "S", "O", "A", "H", "m", "seed", "max_retries"}, where);
      return make_random_decodable(require<int>(spec, "S", where), require<int>(spec, "O", where),
                                   require<int>(spec, "A", where), require<int>(spec, "H", where),
                                   require<int>(spec, "m", where),
                                   get_or<std::uint64_t>(spec, "seed", 0, where),
                                   get_or<int>(spec, "max_retries", 10000, where));
    }
  } catch (const ModelError& e) {
    throw ConfigError(std::string("cannot build environment: ") + e.what());
  }
  throw ConfigError("unknown environment kind '" + kind + "'");
}

FunctionClassPair build_class(const ordered_json& spec, const ordered_json& env_spec,
                              const Pomdp& pomdp, const std::filesystem::path& base_dir) {
  const std::string where = "class";
  const bool hadamard_env = env_spec.is_object() && env_spec.value("kind", "") == "hadamard";
  std::string kind = hadamard_env ? "hadamard" : "decoys";
  if (!spec.is_null()) {
    if (!spec.is_object()) throw ConfigError("class must be an object");
    if (spec.contains("file")) {
      check_keys(spec, {"file"}, where);
      return load_class(resolve(base_dir, require<std::string>(spec, "file", where)));
    }
    kind = require<std::string>(spec, "kind", where);
  }
  if (kind == "hadamard") {
    if (!hadamard_env) throw ConfigError("hadamard class needs a hadamard environment");
    if (!spec.is_null()) check_keys(spec, {"kind"}, where);
    return make_hadamard_instance(env_spec.at("s").get<int>()).classes;
  }
  if (kind == "decoys") {
    int decoys = 3;
    std::uint64_t seed = 0;
    if (!spec.is_null()) {
      check_keys(spec, {"kind", "decoys", "seed"}, where);
      decoys = get_or<int>(spec, "decoys", decoys, where);
      seed = get_or<std::uint64_t>(spec, "seed", seed, where);
    }
    const ModelOracle oracle(pomdp);
    return make_decoy_class(oracle, decoys, seed);
  }
  throw ConfigError("unknown class kind '" + kind + "'");
}

ExperimentConfig ExperimentConfig::from_json(const ordered_json& doc,
                                             const std::filesystem::path& base_dir,
                                             bool require_output) {
  const std::string where = "config";
  check_keys(doc, {"env", "class", "algorithm", "params", "seeds", "output", "master_seed"}, where);
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!doc.contains("env")) throw ConfigError("missing key 'env' in config");
  c.env = doc.at("env");
  if (!c.env.is_object()) throw ConfigError("env must be an object");
  c.function_class = doc.contains("class") ? doc.at("class") : ordered_json(nullptr);
  c.algorithm = require<std::string>(doc, "algorithm", where);
  static const std::set<std::string> algorithms{"mgolf", "ucbvi", "isrl", "olive"};
  if (!algorithms.count(c.algorithm)) throw ConfigError("unknown algorithm '" + c.algorithm + "'");
  if (doc.contains("params")) {
    c.params = doc.at("params");
    if (!c.params.is_object()) throw ConfigError("params must be an object");
  }
  if (!doc.contains("seeds") || !doc.at("seeds").is_array()) {
    throw ConfigError("config needs a 'seeds' array");
  }
  for (const auto& s : doc.at("seeds")) {
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ConfigError("seeds must be non-negative integers");
    }
    c.seeds.push_back(s.get<std::uint64_t>());
  }
  if (c.seeds.empty()) throw ConfigError("seed list is empty");
  if (doc.contains("output")) c.output = require<std::string>(doc, "output", where);
  if (require_output && c.output.empty()) throw ConfigError("missing key 'output' in config");
  if (doc.contains("master_seed")) c.master_seed = require<std::uint64_t>(doc, "master_seed", where);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(doc, path.has_parent_path() ? path.parent_path() : ".");
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json doc;
  doc["env"] = env;
  if (!function_class.is_null()) doc["class"] = function_class;
  doc["algorithm"] = algorithm;
  doc["params"] = params;
  doc["seeds"] = seeds;
  if (!output.empty()) doc["output"] = output;
  if (master_seed) doc["master_seed"] = *master_seed;
  return doc;
}

std::uint64_t ExperimentConfig::hash() const {
  ordered_json doc = to_json();
  doc.erase("output");
  doc.erase("master_seed");
  return fnv1a(doc.dump());
}

std::uint64_t ExperimentConfig::effective_seed(std::size_t i) const {
  const std::uint64_t s = seeds.at(i);
  return master_seed ? mix_seed(mix_seed(*master_seed, hash()), s) : s;
}

CsvTable execute_experiment(const ExperimentConfig& config) {
  const Pomdp pomdp = build_environment(config.env, config.base_dir);
  const RunContext ctx{config, pomdp};
  CsvTable table;
  std::unique_ptr<FunctionClassPair> classes;
  std::unique_ptr<ModelOracle> oracle;
  if (config.algorithm != "ucbvi") oracle = try_oracle(pomdp);
  const bool needs_class = config.algorithm == "mgolf" || config.algorithm == "olive" ||
                           (config.algorithm == "isrl" && config.params.value("mode", "") == "explicit");
  if (needs_class) {
    classes = std::make_unique<FunctionClassPair>(
        build_class(config.function_class, config.env, pomdp, config.base_dir));
    const SuffixSpace expected = pomdp.suffix_space();
    if (!(classes->F.front().space() == expected)) {
      throw ConfigError("function class shape does not match the environment");
    }
  }
  if (config.algorithm == "mgolf") table.header = kMgolfColumns;
  if (config.algorithm == "ucbvi") table.header = kUcbviColumns;
  if (config.algorithm == "isrl") table.header = kIsrlColumns;
  if (config.algorithm == "olive") table.header = kOliveColumns;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    const std::uint64_t seed = config.effective_seed(i);
    if (config.algorithm == "mgolf") run_mgolf_rows(ctx, *classes, oracle.get(), seed, table);
    if (config.algorithm == "ucbvi") run_ucbvi_rows(ctx, seed, table);
    if (config.algorithm == "isrl") run_isrl_rows(ctx, classes.get(), oracle.get(), seed, table);
    if (config.algorithm == "olive") run_olive_rows(ctx, *classes, oracle.get(), seed, table);
  }
  return table;
}

ExperimentRecord run_experiment(const ExperimentConfig& config) {
  if (config.output.empty()) throw ConfigError("missing key 'output' in config");
  const std::string started = timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentRecord record;
  record.config_hash = config.hash();
  record.table = execute_experiment(config);
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  record.csv_path = resolve(config.base_dir, config.output);
  record.manifest_path = record.csv_path;
  record.manifest_path += ".manifest.json";
  write_text_file(record.csv_path, record.table.to_string());

  ordered_json manifest;
  manifest["config"] = config.to_json();
  manifest["config_hash"] = hex64(record.config_hash);
  manifest["version"] = library_version();
  ordered_json seeds = ordered_json::array();
  for (std::size_t i = 0; i < config.seeds.size(); ++i) seeds.push_back(config.effective_seed(i));
  manifest["effective_seeds"] = seeds;
  manifest["rows"] = record.table.rows.size();
  manifest["csv"] = record.csv_path.filename().string();
  manifest["started"] = started;
  manifest["finished"] = timestamp();
  manifest["wall_clock_seconds"] = record.wall_clock_seconds;
  write_text_file(record.manifest_path, manifest.dump(2) + "\n");
  return record;
}

SweepResult sweep(const std::vector<ExperimentConfig>& configs, int parallelism,
                  std::optional<std::uint64_t> master_seed) {
  if (parallelism < 1) throw ConfigError("parallelism must be positive");
  std::vector<CsvTable> tables(configs.size());
  std::vector<std::string> errors(configs.size());
  std::vector<char> failed(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      ExperimentConfig c = configs[i];
      if (!c.master_seed) c.master_seed = master_seed;
      try {
        tables[i] = execute_experiment(c);
      } catch (const std::exception& e) {
        failed[i] = 1;
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(parallelism, static_cast<int>(std::max<std::size_t>(1, configs.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  SweepResult result;
  result.table.header = {"config_index", "config_hash", "algorithm"};
  std::vector<std::string> metrics;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (failed[i]) continue;
    for (const auto& col : tables[i].header)
      if (std::find(metrics.begin(), metrics.end(), col) == metrics.end()) metrics.push_back(col);
  }
  result.table.header.insert(result.table.header.end(), metrics.begin(), metrics.end());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (failed[i]) {
      result.failures.push_back({i, errors[i]});
      continue;
    }
    for (const auto& row : tables[i].rows) {
      std::vector<std::string> out{std::to_string(i), hex64(configs[i].hash()), configs[i].algorithm};
      for (const auto& col : metrics) {
        auto it = std::find(tables[i].header.begin(), tables[i].header.end(), col);
        out.push_back(it == tables[i].header.end() ? "" : row[it - tables[i].header.begin()]);
      }
      result.table.rows.push_back(std::move(out));
    }
  }
  return result;
}

SweepResult run_sweep_file(const std::filesystem::path& path, std::optional<int> parallelism) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep file is not valid JSON: ") + e.what());
  }
  const std::string where = "sweep";
  check_keys(doc, {"configs", "master_seed", "parallelism", "output"}, where);
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (!doc.contains("configs") || !doc.at("configs").is_array() || doc.at("configs").empty()) {
    throw ConfigError("sweep needs a non-empty 'configs' array");
  }
  std::vector<ExperimentConfig> configs;
  for (const auto& c : doc.at("configs")) configs.push_back(ExperimentConfig::from_json(c, base, false));
  std::optional<std::uint64_t> master;
  if (doc.contains("master_seed")) master = require<std::uint64_t>(doc, "master_seed", where);
  const int par = parallelism.value_or(get_or<int>(doc, "parallelism", 1, where));
  const std::string output = require<std::string>(doc, "output", where);
  const std::string started = timestamp();
  SweepResult result = sweep(configs, par, master);
  const auto csv_path = resolve(base, output);
  write_text_file(csv_path, result.table.to_string());
  ordered_json manifest;
  manifest["sweep"] = doc;
  manifest["version"] = library_version();
  ordered_json hashes = ordered_json::array();
  for (const auto& c : configs) hashes.push_back(hex64(c.hash()));
  manifest["config_hashes"] = hashes;
  ordered_json failures = ordered_json::array();
  for (const auto& f : result.failures) failures.push_back({{"index", f.index}, {"error", f.error}});
  manifest["failures"] = failures;
  manifest["rows"] = result.table.rows.size();
  manifest["started"] = started;
  manifest["finished"] = timestamp();
  auto manifest_path = csv_path;
  manifest_path += ".manifest.json";
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  return result;
}

}  // namespace mstep
