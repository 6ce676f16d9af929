#include "phylocp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "phylocp/abc.hpp"
#include "phylocp/chain_io.hpp"
#include "phylocp/config.hpp"
#include "phylocp/likelihood.hpp"
#include "phylocp/parallel.hpp"
#include "phylocp/pmmh.hpp"
#include "phylocp/presets.hpp"
#include "phylocp/sequence.hpp"
#include "phylocp/simulate.hpp"
#include "phylocp/tree.hpp"

namespace phylocp::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_output(const fs::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw InputError("cannot write '" + path.string() + "'");
  return out;
}

fs::path prepare_out_dir(const std::string& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

json parse_json(const std::string& text, const std::string& what)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::string format_double(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json interval_json(const std::optional<Interval>& iv)
{
  if (!iv)
    return nullptr;
  return json::array({iv->lo, iv->hi});
}

json int_keyed(const std::map<int, double>& m)
{
  json out = json::object();
  for (const auto& [k, v] : m)
    out[std::to_string(k)] = v;
  return out;
}

json int_keyed(const std::map<int, int>& m)
{
  json out = json::object();
  for (const auto& [k, v] : m)
    out[std::to_string(k)] = v;
  return out;
}

// Options shared by the commands that consume a run configuration.
struct Inputs {
  std::string preset;
  std::string config_path;
  std::string tree_path;
  std::string data_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool by_name = false;
};

void add_config_options(CLI::App& cmd, Inputs& in)
{
  auto* preset = cmd.add_option("--preset", in.preset, "bundled configuration name");
  cmd.add_option("--config", in.config_path, "JSON run configuration")->excludes(preset);
  cmd.add_option("--tree", in.tree_path, "Newick tree file (overrides the configured tree)");
  cmd.add_option("--seed", in.seed, "random seed (overrides the configuration)");
  cmd.add_option("--threads", in.threads, "worker threads (default: all available)");
  cmd.add_option("--out", in.out_dir, "output directory")->required();
}

RunConfig load_config(const Inputs& in)
{
  if (!in.preset.empty()) {
    const auto text = preset_json(in.preset);
    if (!text)
      throw ConfigError("unknown preset '" + in.preset + "'");
    return run_config_from_json(parse_json(*text, "preset " + in.preset));
  }
  if (!in.config_path.empty())
    return run_config_from_json(parse_json(read_file(in.config_path), in.config_path));
  RunConfig c;
  c.validate();
  return c;
}

Tree load_tree(const Inputs& in, RunConfig& config)
{
  if (!in.tree_path.empty())
    config.tree = read_file(in.tree_path);
  if (config.tree.empty())
    throw ConfigError("no tree: pass --tree or use a configuration with a tree");
  return parse_newick(config.tree);
}

SequenceData load_data(const std::string& path, const Tree& tree, bool by_name)
{
  if (path.empty())
    throw ConfigError("--data is required");
  std::istringstream text(read_file(path));
  return sequences_for_tree(read_fasta(text), tree, by_name);
}

std::string meta_line(const std::string& hash, std::uint64_t seed)
{
  return "config_hash=" + hash + " seed=" + std::to_string(seed);
}

// simulate ----------------------------------------------------------------------

int cmd_simulate(Inputs& in, std::optional<int> m_override)
{
  RunConfig config = load_config(in);
  const Tree tree = load_tree(in, config);
  if (!config.simulation)
    throw ConfigError("configuration has no simulation block");
  TruthSpec& truth = *config.simulation;
  if (m_override)
    truth.m = *m_override;
  if (in.seed)
    truth.seed = *in.seed;
  config.validate();
  set_thread_count(in.threads);

  const auto result = simulate_dataset({tree, truth.state, truth.m, truth.seed});
  const std::string hash = config_hash(config);
  const fs::path dir = prepare_out_dir(in.out_dir);
  {
    auto out = open_output(dir / "data.fasta");
    write_fasta(out, result.leaves, 60, meta_line(hash, truth.seed));
  }
  {
    auto out = open_output(dir / "tree.nwk");
    out << '[' << meta_line(hash, truth.seed) << "]\n" << tree.to_newick() << '\n';
  }
  {
    auto out = open_output(dir / "truth.json");
    json doc = {{"k", truth.state.k()},
                {"s", truth.state.s},
                {"theta", std::vector<double>(truth.state.theta.begin(), truth.state.theta.end())},
                {"m", truth.m},
                {"seed", truth.seed},
                {"config_hash", hash}};
    out << doc.dump(2) << '\n';
  }
  {
    auto out = open_output(dir / "config.json");
    json doc = to_json(config);
    doc["config_hash"] = hash;
    out << doc.dump(2) << '\n';
  }
  std::cout << "wrote " << result.leaves.sequence_count() << "x" << result.leaves.site_count() << " dataset to "
            << dir.string() << '\n';
  return kSuccess;
}

// infer -------------------------------------------------------------------------

int cmd_infer(Inputs& in, const std::string& method, std::optional<int> g, std::optional<int> iterations,
              std::optional<double> budget, std::optional<int> burn_in)
{
  RunConfig config = load_config(in);
  const Tree tree = load_tree(in, config);
  const SequenceData data = load_data(in.data_path, tree, in.by_name);
  if (!method.empty())
    config.method = method;
  if (g)
    config.pmmh.g = *g;
  if (iterations) {
    config.pmmh.iterations = *iterations;
    config.pmmh.time_budget_seconds = 0.0;
  }
  if (budget) {
    config.pmmh.time_budget_seconds = *budget;
    config.pmmh.iterations = 0;
  }
  if (in.seed)
    config.pmmh.seed = *in.seed;
  if (burn_in)
    config.burn_in = *burn_in;
  config.validate();
  if (config.pmmh.g > tree.leaf_count())
    throw ConfigError("g must not exceed the number of leaves");
  set_thread_count(in.threads);

  const std::string hash = config_hash(config);
  const std::uint64_t seed = config.pmmh.seed;
  const fs::path dir = prepare_out_dir(in.out_dir);
  json summary = {{"method", config.method}, {"config_hash", hash}, {"seed", seed}, {"config", to_json(config)}};

  if (config.method == "abc-smc") {
    const auto result = run_abc_smc_model_selection(config.abc, config.prior, config.proposals, data, tree, seed);
    {
      auto out = open_output(dir / "population.csv");
      out << "# " << meta_line(hash, seed) << " method=abc-smc\n";
      out << "k,s,theta,weight\n";
      for (const auto& p : result.population) {
        out << p.state.k() << ',';
        for (int j = 0; j < p.state.k(); ++j)
          out << (j ? ";" : "") << p.state.s[j];
        out << ',';
        for (Eigen::Index j = 0; j < p.state.theta.size(); ++j)
          out << (j ? ";" : "") << format_double(p.state.theta[j]);
        out << ',' << format_double(p.weight) << '\n';
      }
    }
    {
      auto out = open_output(dir / "generations.csv");
      out << "# " << meta_line(hash, seed) << " method=abc-smc\n";
      out << "generation,tolerance,attempts,accepted\n";
      for (std::size_t t = 0; t < result.generations.size(); ++t) {
        const auto& gen = result.generations[t];
        out << t << ',' << format_double(gen.tolerance) << ',' << gen.attempts << ',' << gen.accepted << '\n';
      }
    }
    json gens = json::array();
    for (const auto& gen : result.generations)
      gens.push_back({{"tolerance", gen.tolerance}, {"attempts", gen.attempts}, {"accepted", gen.accepted}});
    summary["model_probs"] = int_keyed(result.model_probs);
    summary["model_ess"] = int_keyed(result.model_ess);
    summary["sample_counts"] = int_keyed(result.model_counts);
    summary["generations"] = gens;
  } else {
    std::vector<ChainRecord> chain;
    if (config.method == "pmmh") {
      chain = run_pmmh(config.pmmh, data, tree);
    } else {
      chain = run_pmmh_abc(config.pmmh, config.abc, data, tree);
    }
    {
      auto out = open_output(dir / "chain.csv");
      write_chain_csv(out, chain, {{"config_hash", hash}, {"seed", std::to_string(seed)}, {"method", config.method}});
    }
    const int burn = std::min<int>(config.burn_in, static_cast<int>(chain.size()) - 1);
    const auto chain_summary = summarize_chain(chain, burn);
    summary["model_probs"] = int_keyed(chain_summary.model_probs);
    summary["acceptance_ratio"] = chain_summary.acceptance_ratio;
    summary["chain"] = summary_to_json(chain_summary);
  }
  {
    auto out = open_output(dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  std::cout << "model probabilities:";
  for (const auto& [k, p] : summary["model_probs"].items())
    std::cout << " k=" << k << ':' << p.get<double>();
  std::cout << "\nwrote results to " << dir.string() << '\n';
  return kSuccess;
}

// diagnose ----------------------------------------------------------------------

int cmd_diagnose(const std::string& chain_path, const std::string& summary_path, const std::string& out_dir,
                 int burn_in, bool force, int max_lag, std::optional<int> target_k)
{
  std::istringstream text(read_file(chain_path));
  const ChainFile file = read_chain_csv(text);
  if (file.records.empty())
    throw ConfigError("chain file has no records");
  const auto hash_it = file.meta.find("config_hash");
  const std::string hash = hash_it == file.meta.end() ? "" : hash_it->second;
  if (!summary_path.empty()) {
    const json summary = parse_json(read_file(summary_path), summary_path);
    const std::string other = summary.value("config_hash", "");
    if (other != hash && !force)
      throw ConfigError("chain config hash '" + hash + "' does not match summary hash '" + other +
                        "' (use --force to override)");
  }
  if (burn_in < 0 || burn_in >= static_cast<int>(file.records.size()))
    throw ConfigError("burn-in must be smaller than the chain length (" + std::to_string(file.records.size()) + ")");

  const auto summary = summarize_chain(file.records, burn_in);
  const fs::path dir = prepare_out_dir(out_dir);
  const auto seed_it = file.meta.find("seed");
  const std::string seed = seed_it == file.meta.end() ? "" : seed_it->second;
  const std::string header = "# config_hash=" + hash + " seed=" + seed + "\n";
  {
    auto out = open_output(dir / "diagnostics.json");
    json doc = summary_to_json(summary);
    doc["config_hash"] = hash;
    doc["seed"] = seed;
    out << doc.dump(2) << '\n';
  }

  // plot data for the most visited dimension with change-points, unless chosen
  int k = 0;
  if (target_k) {
    k = *target_k;
  } else {
    int best = -1;
    for (const auto& [kk, c] : summary.sample_counts)
      if (kk > 0 && c > best) {
        best = c;
        k = kk;
      }
  }
  {
    auto out = open_output(dir / "acf.csv");
    out << header << "lag,acf\n";
    const auto table = acf_table(k_series(file.records, burn_in), max_lag);
    for (std::size_t lag = 0; lag < table.size(); ++lag)
      out << lag << ',' << format_double(table[lag]) << '\n';
  }
  if (summary.sample_counts.count(k)) {
    auto out = open_output(dir / "changepoint_histogram.csv");
    out << header << "k,j,site,count\n";
    for (int j = 1; j <= k; ++j)
      for (const auto& [site, count] : integer_histogram(changepoint_samples(file.records, burn_in, k, j)))
        out << k << ',' << j << ',' << site << ',' << count << '\n';
    auto dens = open_output(dir / "rate_density.csv");
    dens << header << "k,j,x,density\n";
    for (int j = 1; j <= k + 1; ++j) {
      const auto samples = rate_samples(file.records, burn_in, k, j);
      if (samples.size() < 2)
        continue;
      const auto grid = kernel_density(samples);
      for (std::size_t i = 0; i < grid.x.size(); ++i)
        dens << k << ',' << j << ',' << format_double(grid.x[i]) << ',' << format_double(grid.density[i]) << '\n';
    }
  }
  std::cout << "wrote diagnostics to " << dir.string() << '\n';
  return kSuccess;
}

// bench -------------------------------------------------------------------------

int cmd_bench(Inputs& in, const std::vector<int>& g_override, std::optional<int> runs)
{
  using Clock = std::chrono::steady_clock;
  RunConfig config = load_config(in);
  const Tree tree = load_tree(in, config);
  const SequenceData data = load_data(in.data_path, tree, in.by_name);
  if (!g_override.empty())
    config.bench.g = g_override;
  if (runs)
    config.bench.runs = *runs;
  if (in.seed)
    config.pmmh.seed = *in.seed;
  config.validate();
  for (int g : config.bench.g)
    if (g < 1 || g > tree.leaf_count())
      throw ConfigError("bench g outside [1, n]");
  set_thread_count(in.threads);

  const std::string hash = config_hash(config);
  const std::uint64_t seed = config.pmmh.seed;
  const auto ks = config.bench.k.empty() ? config.prior.k_support : config.bench.k;
  const fs::path dir = prepare_out_dir(in.out_dir);
  auto rows = open_output(dir / "bench.csv");
  auto table = open_output(dir / "bench_summary.csv");
  rows << "# " << meta_line(hash, seed) << "\ng,k,run,log_evidence,seconds\n";
  table << "# " << meta_line(hash, seed)
        << "\ng,k,runs,mean_log_evidence,var_log_evidence,mean_seconds,likelihood_seconds\n";

  SmcOptions options;
  options.particles = config.pmmh.particles;
  options.schedule = make_schedule(config.pmmh.steps, config.pmmh.schedule_exponent);
  options.systematic_resampling = config.pmmh.systematic_resampling;

  for (int g : config.bench.g) {
    const LikelihoodEngine engine(tree, g);
    // timed at the prior mean rate
    const double lik_seconds = complexity_probe(engine, data, config.prior.gamma_shape * config.prior.gamma_scale);
    for (int k : ks) {
      std::vector<double> values;
      double total_seconds = 0.0;
      for (int r = 0; r < config.bench.runs; ++r) {
        options.seed = derive_seed(seed, static_cast<std::uint64_t>(g) * 1000 + static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(r));
        const auto start = Clock::now();
        double le = -std::numeric_limits<double>::infinity();
        try {
          le = run_smc(k, data, engine, config.prior, config.proposals, options, config.pmmh.kernel_sweeps).log_evidence;
        } catch (const DegenerateWeights&) {
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        total_seconds += secs;
        values.push_back(le);
        rows << g << ',' << k << ',' << r << ',' << format_double(le) << ',' << format_double(secs) << '\n';
      }
      double mean = 0.0, var = 0.0;
      for (double v : values)
        mean += v / values.size();
      for (double v : values)
        var += (v - mean) * (v - mean);
      var = values.size() > 1 ? var / (values.size() - 1) : 0.0;
      table << g << ',' << k << ',' << values.size() << ',' << format_double(mean) << ',' << format_double(var) << ','
            << format_double(total_seconds / values.size()) << ',' << format_double(lik_seconds) << '\n';
      std::cout << "g=" << g << " k=" << k << " mean log evidence " << mean << " variance " << var << '\n';
    }
  }
  std::cout << "wrote bench tables to " << dir.string() << '\n';
  return kSuccess;
}

} // namespace

json summary_to_json(const ChainSummary& s)
{
  json params = json::object();
  for (const auto& [name, p] : s.parameters)
    params[name] = {{"samples", p.samples},
                    {"mean", p.mean},
                    {"geweke_z", p.geweke},
                    {"quantile_95", interval_json(p.quantile)},
                    {"hpd_95", interval_json(p.hpd)},
                    {"mean_mcse_95", interval_json(p.mcse)}};
  return {{"records", s.records},
          {"burn_in", s.burn_in},
          {"model_probs", int_keyed(s.model_probs)},
          {"sample_counts", int_keyed(s.sample_counts)},
          {"acceptance_ratio", s.acceptance_ratio},
          {"acf_k", int_keyed(s.acf)},
          {"geweke_z_k", s.geweke_k},
          {"ess_k", s.ess_k},
          {"parameters", params}};
}

int run(const std::vector<std::string>& args)
{
  CLI::App app{"Bayesian change-point inference for sequences on a fixed phylogeny"};
  app.require_subcommand(1);

  Inputs sim_in;
  std::optional<int> sim_m;
  auto* sim = app.add_subcommand("simulate", "simulate a dataset from a configuration's truth block");
  add_config_options(*sim, sim_in);
  sim->add_option("--m", sim_m, "number of sites (overrides the configuration)");

  Inputs inf_in;
  std::string method;
  std::optional<int> inf_g, inf_iter, inf_burn;
  std::optional<double> inf_budget;
  auto* inf = app.add_subcommand("infer", "run a sampler on a dataset");
  add_config_options(*inf, inf_in);
  inf->add_option("--data", inf_in.data_path, "relaxed FASTA alignment")->required();
  inf->add_option("--method", method, "pmmh, pmmh-abc or abc-smc")
      ->check(CLI::IsMember({"pmmh", "pmmh-abc", "abc-smc"}));
  inf->add_option("--g", inf_g, "time-machine truncation (1 = exact)");
  auto* iter_opt = inf->add_option("--iterations", inf_iter, "chain length in records");
  inf->add_option("--time-budget", inf_budget, "wall-clock budget in seconds")->excludes(iter_opt);
  inf->add_option("--burn-in", inf_burn, "records discarded by the summary");
  inf->add_flag("--map-by-name", inf_in.by_name, "match FASTA records to leaves by label");

  std::string chain_path, summary_path, diag_out;
  int diag_burn = 0, max_lag = 100;
  bool force = false;
  std::optional<int> diag_k;
  auto* diag = app.add_subcommand("diagnose", "summarize a chain CSV");
  diag->add_option("--chain", chain_path, "chain CSV from infer")->required();
  diag->add_option("--summary", summary_path, "summary JSON to check the config hash against");
  diag->add_option("--out", diag_out, "output directory")->required();
  diag->add_option("--burn-in", diag_burn, "records to discard");
  diag->add_option("--max-lag", max_lag, "largest lag of the ACF table");
  diag->add_option("--k", diag_k, "dimension for the plot data");
  diag->add_flag("--force", force, "accept a chain/summary hash mismatch");

  Inputs bench_in;
  std::vector<int> bench_g;
  std::optional<int> bench_runs;
  auto* bench = app.add_subcommand("bench", "repeat SMC evidence estimates per g and k");
  add_config_options(*bench, bench_in);
  bench->add_option("--data", bench_in.data_path, "relaxed FASTA alignment")->required();
  bench->add_option("--g", bench_g, "truncation levels");
  bench->add_option("--runs", bench_runs, "estimates per (g, k)");
  bench->add_flag("--map-by-name", bench_in.by_name, "match FASTA records to leaves by label");

  std::string show;
  auto* pre = app.add_subcommand("presets", "list bundled configurations");
  pre->add_option("--show", show, "print one configuration");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    if (*sim)
      return cmd_simulate(sim_in, sim_m);
    if (*inf)
      return cmd_infer(inf_in, method, inf_g, inf_iter, inf_budget, inf_burn);
    if (*diag)
      return cmd_diagnose(chain_path, summary_path, diag_out, diag_burn, force, max_lag, diag_k);
    if (*bench)
      return cmd_bench(bench_in, bench_g, bench_runs);
    if (show.empty()) {
      for (const auto& name : preset_names())
        std::cout << name << '\n';
      return kSuccess;
    }
    const auto text = preset_json(show);
    if (!text)
      throw ConfigError("unknown preset '" + show + "'");
    std::cout << *text << '\n';
    return kSuccess;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ToleranceStall& e) {
    std::cerr << "engine failure: " << e.what() << '\n';
    return kEngineError;
  } catch (const DegenerateWeights& e) {
    std::cerr << "engine failure: " << e.what() << '\n';
    return kEngineError;
  } catch (const NewickError& e) {
    std::cerr << "invalid tree: " << e.what() << '\n';
    return kValidationError;
  } catch (const ChainParseError& e) {
    std::cerr << "invalid chain: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    // FASTA and data-shape problems surface as runtime errors
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidationError;
  }
}

int run(int argc, char** argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i)
    args.emplace_back(argv[i]);
  return run(args);
}

} // namespace phylocp::cli
