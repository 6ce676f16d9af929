#include "phylocp/config.hpp"

#include <cstdio>
#include <set>

namespace phylocp {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed)
{
  if (!obj.is_object())
    throw ConfigError(std::string(where) + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!ok.count(item.key()))
      throw ConfigError(std::string("unknown key '") + item.key() + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out)
{
  if (!obj.contains(key))
    return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

} // namespace

void RunConfig::validate() const
{
  try {
    prior.validate();
    proposals.validate();
    pmmh.validate();
    abc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (method != "pmmh" && method != "pmmh-abc" && method != "abc-smc")
    throw ConfigError("method must be one of pmmh, pmmh-abc, abc-smc");
  if (burn_in < 0)
    throw ConfigError("burn_in must be nonnegative");
  if (bench.runs < 1 || bench.g.empty())
    throw ConfigError("bench needs at least one run and one g");
  for (int k : bench.k)
    if (!prior.supports(k))
      throw ConfigError("bench k outside the prior support");
  if (simulation) {
    if (simulation->m < 0)
      throw ConfigError("simulation m must be nonnegative");
    if (!is_valid(simulation->state, simulation->m, true))
      throw ConfigError("simulation truth is not a valid state for m sites");
  }
}

RunConfig run_config_from_json(const json& doc)
{
  check_keys(doc, "config",
             {"name", "tree", "simulation", "prior", "proposals", "method", "pmmh", "abc", "burn_in", "bench",
              "config_hash"});
  RunConfig c;
  read(doc, "name", c.name);
  read(doc, "tree", c.tree);
  read(doc, "method", c.method);
  read(doc, "burn_in", c.burn_in);
  if (doc.contains("simulation")) {
    const auto& s = doc.at("simulation");
    check_keys(s, "simulation", {"m", "s", "theta", "seed"});
    TruthSpec t;
    std::vector<double> theta;
    read(s, "m", t.m);
    read(s, "s", t.state.s);
    read(s, "theta", theta);
    read(s, "seed", t.seed);
    t.state.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    c.simulation = std::move(t);
  }
  if (doc.contains("prior")) {
    const auto& p = doc.at("prior");
    check_keys(p, "prior", {"k_support", "gamma_shape", "gamma_scale"});
    read(p, "k_support", c.prior.k_support);
    read(p, "gamma_shape", c.prior.gamma_shape);
    read(p, "gamma_scale", c.prior.gamma_scale);
  }
  if (doc.contains("proposals")) {
    const auto& p = doc.at("proposals");
    check_keys(p, "proposals", {"k_window", "s_window", "rate_sigma"});
    read(p, "k_window", c.proposals.k_window);
    read(p, "s_window", c.proposals.s_window);
    read(p, "rate_sigma", c.proposals.rate_sigma);
  }
  if (doc.contains("pmmh")) {
    const auto& p = doc.at("pmmh");
    check_keys(p, "pmmh",
               {"iterations", "time_budget_seconds", "particles", "steps", "schedule_exponent", "kernel_sweeps",
                "systematic_resampling", "g", "seed", "max_init_retries"});
    read(p, "iterations", c.pmmh.iterations);
    read(p, "time_budget_seconds", c.pmmh.time_budget_seconds);
    read(p, "particles", c.pmmh.particles);
    read(p, "steps", c.pmmh.steps);
    read(p, "schedule_exponent", c.pmmh.schedule_exponent);
    read(p, "kernel_sweeps", c.pmmh.kernel_sweeps);
    read(p, "systematic_resampling", c.pmmh.systematic_resampling);
    read(p, "g", c.pmmh.g);
    read(p, "seed", c.pmmh.seed);
    read(p, "max_init_retries", c.pmmh.max_init_retries);
  }
  if (doc.contains("abc")) {
    const auto& a = doc.at("abc");
    check_keys(a, "abc",
               {"pseudo_datasets", "particles", "steps", "tolerances", "terminal_divisor", "kernel_sweeps",
                "max_attempts_per_generation"});
    read(a, "pseudo_datasets", c.abc.pseudo_datasets);
    read(a, "particles", c.abc.particles);
    read(a, "steps", c.abc.steps);
    read(a, "tolerances", c.abc.tolerances);
    read(a, "terminal_divisor", c.abc.terminal_divisor);
    read(a, "kernel_sweeps", c.abc.kernel_sweeps);
    read(a, "max_attempts_per_generation", c.abc.max_attempts_per_generation);
  }
  if (doc.contains("bench")) {
    const auto& b = doc.at("bench");
    check_keys(b, "bench", {"g", "runs", "k"});
    read(b, "g", c.bench.g);
    read(b, "runs", c.bench.runs);
    read(b, "k", c.bench.k);
  }
  c.pmmh.prior = c.prior;
  c.pmmh.proposals = c.proposals;
  c.validate();
  return c;
}

json to_json(const RunConfig& c)
{
  json doc;
  doc["name"] = c.name;
  doc["tree"] = c.tree;
  doc["method"] = c.method;
  doc["burn_in"] = c.burn_in;
  if (c.simulation) {
    const auto& t = *c.simulation;
    doc["simulation"] = {{"m", t.m},
                         {"s", t.state.s},
                         {"theta", std::vector<double>(t.state.theta.begin(), t.state.theta.end())},
                         {"seed", t.seed}};
  }
  doc["prior"] = {{"k_support", c.prior.k_support},
                  {"gamma_shape", c.prior.gamma_shape},
                  {"gamma_scale", c.prior.gamma_scale}};
  doc["proposals"] = {{"k_window", c.proposals.k_window},
                      {"s_window", c.proposals.s_window},
                      {"rate_sigma", c.proposals.rate_sigma}};
  doc["pmmh"] = {{"iterations", c.pmmh.iterations},
                 {"time_budget_seconds", c.pmmh.time_budget_seconds},
                 {"particles", c.pmmh.particles},
                 {"steps", c.pmmh.steps},
                 {"schedule_exponent", c.pmmh.schedule_exponent},
                 {"kernel_sweeps", c.pmmh.kernel_sweeps},
                 {"systematic_resampling", c.pmmh.systematic_resampling},
                 {"g", c.pmmh.g},
                 {"seed", c.pmmh.seed},
                 {"max_init_retries", c.pmmh.max_init_retries}};
  doc["abc"] = {{"pseudo_datasets", c.abc.pseudo_datasets},
                {"particles", c.abc.particles},
                {"steps", c.abc.steps},
                {"tolerances", c.abc.tolerances},
                {"terminal_divisor", c.abc.terminal_divisor},
                {"kernel_sweeps", c.abc.kernel_sweeps},
                {"max_attempts_per_generation", c.abc.max_attempts_per_generation}};
  doc["bench"] = {{"g", c.bench.g}, {"runs", c.bench.runs}, {"k", c.bench.k}};
  return doc;
}

std::string fnv1a_hex(const std::string& text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& config)
{
  return fnv1a_hex(to_json(config).dump());
}

} // namespace phylocp
