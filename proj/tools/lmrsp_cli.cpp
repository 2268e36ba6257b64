// Command-line front end: single simulations, load sweeps, capacity-region
// queries, and frozen-queue Psi/Phi estimation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmrsp/lmrsp.hpp"

namespace {

using namespace lmrsp;

void write_output(const std::vector<RunMetrics>& rows, const std::string& path,
                  const std::string& format) {
  const std::string payload =
      format == "jsonl" ? metrics_jsonl(rows) : metrics_csv(rows);
  if (path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << payload;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    out.push_back(std::stod(csv.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

void warn_if_needed(const Experiment& ex) {
  if (!ex.rho_alpha_ok)
    std::cerr << "warning: rho*alpha >= delta*nu/sqrt(N); the switching "
                 "slack may swamp the policy's gain\n";
}

int run_simulate(const std::string& config_path,
                 std::optional<std::uint64_t> seed, const std::string& out,
                 const std::string& format, bool trace) {
  const auto cfg = load_config(config_path);
  const auto ex = make_experiment(cfg);
  warn_if_needed(ex);
  const std::uint64_t use_seed = seed.value_or(cfg.seeds.front());

  std::ofstream trace_file;
  TraceSink sink;
  const bool tracing = trace || cfg.trace;
  if (tracing) {
    const std::string trace_path =
        (out.empty() ? std::string("trace") : out) + ".trace.jsonl";
    trace_file.open(trace_path, std::ios::binary);
    if (!trace_file) throw ConfigError("cannot open " + trace_path);
    sink = [&trace_file](const TraceRecord& rec) {
      trace_file << trace_to_json(rec).dump() << '\n';
    };
    std::cerr << "trace: " << trace_path << '\n';
  }
  const RunMetrics m =
      run_simulation(ex, use_seed, tracing ? &sink : nullptr);
  write_output({m}, out, format);
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& loads_csv,
              const std::string& direction_csv, bool raw_direction,
              const std::string& out, const std::string& format,
              int parallel) {
  const auto cfg = load_config(config_path);
  const auto loads = parse_double_list(loads_csv);
  const auto ex = make_experiment(cfg, false);
  warn_if_needed(ex);

  std::vector<double> direction = direction_csv.empty()
                                      ? cfg.arrivals.mean
                                      : parse_double_list(direction_csv);
  if (!raw_direction)
    direction = scale_to_gamma_boundary(direction, cfg.channel, *ex.set);

  const auto sweep = sweep_load(cfg, direction, loads, parallel);
  write_output(sweep.rows, out, format);
  std::cerr << "direction:";
  for (double v : direction) std::cerr << ' ' << format_double(v);
  std::cerr << '\n';
  if (sweep.largest_all_stable)
    std::cerr << "largest load stable on all seeds: "
              << format_double(*sweep.largest_all_stable) << '\n';
  if (sweep.smallest_any_unstable)
    std::cerr << "smallest load unstable on some seed: "
              << format_double(*sweep.smallest_any_unstable) << '\n';
  std::cerr << "monotone seed fraction: "
            << format_double(sweep.monotone_seed_fraction) << '\n';
  return 0;
}

int run_membership(const std::string& config_path, const std::string& rate_csv,
                   double theta) {
  const auto cfg = load_config(config_path);
  const auto set = enumerate_schedules(cfg.graph, cfg.interference);
  const auto rate = parse_double_list(rate_csv);
  const auto res = capacity_membership(rate, cfg.channel, set, theta);
  nlohmann::json j;
  j["theta"] = theta;
  j["feasible"] = res.feasible;
  j["inside"] = res.inside;
  if (res.feasible) j["min_max_beta"] = res.min_max_beta;
  if (res.certificate) {
    j["epsilon"] = res.certificate->epsilon;
    nlohmann::json betas = nlohmann::json::array();
    for (const auto& [key, value] : res.certificate->beta)
      betas.push_back({{"state_mask", key.first},
                       {"schedule", key.second},
                       {"beta", value}});
    j["beta"] = betas;
  }
  std::cout << j.dump(2) << '\n';
  return res.inside ? 0 : 2;
}

int run_theta_min(double zeta, double rho, double delta, double r) {
  std::cout << format_double(theta_min(zeta, rho, delta, r)) << '\n';
  return 0;
}

int run_estimate_theta(const std::string& config_path, int horizon_scale,
                       int reps, int random_directions, std::uint64_t seed,
                       double queue_scale, int parallel) {
  const auto cfg = load_config(config_path);
  const auto set = enumerate_schedules(cfg.graph, cfg.interference);
  const int n = cfg.graph.link_count();
  Rng grid_rng(mix_seed(seed, 0xd1cull));
  const auto grid = default_direction_grid(n, random_directions, grid_rng);
  int k0 = 1;
  if (cfg.channel.kind == ChannelKind::two_state_markov && cfg.channel.r > 0.0 &&
      cfg.channel.r < 1.0)
    k0 = mixing_horizon(n, cfg.channel.r);
  const int horizon = horizon_scale * k0;
  const auto est = estimate_theta(cfg.channel, set, cfg.policy, horizon, grid,
                                  reps, seed, queue_scale, -1, parallel);
  nlohmann::json j;
  j["theta_hat"] = est.theta_hat;
  j["grid_size"] = est.grid_size;
  j["horizon"] = est.horizon;
  j["reps"] = est.reps;
  j["queue_scale"] = est.queue_scale;
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& row : est.per_direction)
    dirs.push_back({{"direction", row.direction},
                    {"psi", row.psi},
                    {"psi_std_error", row.psi_std_error},
                    {"phi", row.phi},
                    {"phi_std_error", row.phi_std_error},
                    {"value", row.value}});
  j["per_direction"] = dirs;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_estimate(const std::string& config_path, const std::string& queue_csv,
                 int horizon, int reps, std::uint64_t seed) {
  const auto cfg = load_config(config_path);
  const auto set = enumerate_schedules(cfg.graph, cfg.interference);
  const auto qd = parse_double_list(queue_csv);
  QueueVector x;
  for (double v : qd) x.push_back(static_cast<std::int64_t>(v));
  Rng rng(mix_seed(seed, 0));
  const ChannelState s0 = initial_state(cfg.channel, rng);
  const std::size_t sched0 =
      algorithm_a_sample(cfg.policy, x, s0, set, cfg.channel, rng);
  const auto est = estimate_psi_phi(x, sched0, s0, horizon, cfg.policy,
                                    cfg.channel, set, reps, rng);
  nlohmann::json j;
  j["psi"] = est.psi.value;
  j["psi_std_error"] = est.psi.std_error;
  j["phi"] = est.phi.value;
  j["phi_std_error"] = est.phi.std_error;
  j["upsilon"] = est.upsilon;
  j["horizon"] = est.horizon;
  j["reps"] = est.reps;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LM-RSP wireless scheduling simulator"};
  app.require_subcommand(1);

  std::string config_path, out, format = "csv";
  std::string loads_csv, direction_csv, rate_csv, queue_csv;
  std::optional<std::uint64_t> seed_opt;
  std::uint64_t seed = 1;
  bool trace = false, raw_direction = false;
  int parallel = 1, reps = 200, random_directions = 64, horizon = 1000;
  int horizon_scale = 100;
  double theta = 1.0, zeta = 0.0, rho = 0.1, delta = 1.0, r = 0.5;
  double queue_scale = 1e6;

  auto* simulate = app.add_subcommand("simulate", "run one config+seed");
  simulate->add_option("--config", config_path)->required();
  simulate->add_option("--seed", seed_opt);
  simulate->add_option("--out", out);
  simulate->add_option("--format", format)
      ->check(CLI::IsMember({"csv", "jsonl"}));
  simulate->add_flag("--trace", trace);
  simulate->add_option("--parallel", parallel);

  auto* sweep = app.add_subcommand("sweep", "run a load grid");
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--loads", loads_csv)->required();
  sweep->add_option("--direction", direction_csv,
                    "arrival direction (default: config mean)");
  sweep->add_flag("--raw-direction", raw_direction,
                  "skip scaling the direction to the capacity boundary");
  sweep->add_option("--out", out);
  sweep->add_option("--format", format)->check(CLI::IsMember({"csv", "jsonl"}));
  sweep->add_option("--parallel", parallel);

  auto* capacity = app.add_subcommand("capacity", "capacity-region queries");
  capacity->require_subcommand(1);
  auto* membership = capacity->add_subcommand("membership");
  membership->add_option("--config", config_path)->required();
  membership->add_option("--rate", rate_csv)->required();
  membership->add_option("--theta", theta);
  auto* tmin = capacity->add_subcommand("theta-min");
  tmin->add_option("--zeta", zeta);
  tmin->add_option("--rho", rho)->required();
  tmin->add_option("--delta", delta)->required();
  tmin->add_option("--r", r)->required();
  auto* etheta = capacity->add_subcommand("estimate-theta");
  etheta->add_option("--config", config_path)->required();
  etheta->add_option("--horizon-scale", horizon_scale,
                     "rollout horizon in units of the mixing horizon");
  etheta->add_option("--reps", reps);
  etheta->add_option("--random-directions", random_directions);
  etheta->add_option("--seed", seed);
  etheta->add_option("--queue-scale", queue_scale);
  etheta->add_option("--parallel", parallel);

  auto* estimate = app.add_subcommand("estimate", "frozen-queue Psi/Phi");
  estimate->add_option("--config", config_path)->required();
  estimate->add_option("--queue", queue_csv)->required();
  estimate->add_option("--horizon", horizon);
  estimate->add_option("--reps", reps);
  estimate->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return run_simulate(config_path, seed_opt, out, format, trace);
    if (sweep->parsed())
      return run_sweep(config_path, loads_csv, direction_csv, raw_direction,
                       out, format, parallel);
    if (capacity->parsed()) {
      if (membership->parsed())
        return run_membership(config_path, rate_csv, theta);
      if (tmin->parsed()) return run_theta_min(zeta, rho, delta, r);
      if (etheta->parsed())
        return run_estimate_theta(config_path, horizon_scale, reps,
                                  random_directions, seed, queue_scale,
                                  parallel);
    }
    if (estimate->parsed())
      return run_estimate(config_path, queue_csv, horizon, reps, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
