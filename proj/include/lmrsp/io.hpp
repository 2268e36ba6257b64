#pragma once

// Config file parsing (JSON, unknown keys rejected) and the CSV / JSON-lines
// result writers. All floating-point output uses a fixed printf format so
// repeated runs produce byte-identical files.

#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "experiment.hpp"

namespace lmrsp {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace detail {

using json = nlohmann::json;

inline void require_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get_required(const json& obj, const std::string& where,
               const std::string& key) {
  if (!obj.contains(key))
    throw ConfigError("config: missing key '" + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "' in " + where);
  }
}

template <class T>
T get_optional(const json& obj, const std::string& where,
               const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + key + "' in " + where);
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
  using detail::get_optional;
  using detail::get_required;
  using detail::require_keys;
  if (!root.is_object()) throw ConfigError("config: root must be an object");
  require_keys(root, "root",
               {"graph", "interference", "channel", "arrivals", "policy",
                "horizon", "warmup_fraction", "seeds", "trace", "stability"});

  ExperimentConfig cfg;

  const auto& graph = root.at("graph");
  require_keys(graph, "graph", {"nodes", "edges"});
  cfg.graph.node_count = get_required<int>(graph, "graph", "nodes");
  for (const auto& e : get_required<std::vector<std::vector<int>>>(
           graph, "graph", "edges")) {
    if (e.size() != 2) throw ConfigError("config: edge must be a pair");
    cfg.graph.edges.emplace_back(e[0], e[1]);
  }

  if (root.contains("interference")) {
    const auto& interference = root.at("interference");
    require_keys(interference, "interference", {"kappa"});
    cfg.interference.kappa =
        get_optional<int>(interference, "interference", "kappa", 1);
  }

  const auto& channel = root.at("channel");
  require_keys(channel, "channel", {"kind", "r", "good_rates", "frozen_state"});
  const auto channel_kind = get_required<std::string>(channel, "channel", "kind");
  if (channel_kind == "two_state_markov")
    cfg.channel.kind = ChannelKind::two_state_markov;
  else if (channel_kind == "frozen")
    cfg.channel.kind = ChannelKind::frozen;
  else
    throw ConfigError("config: channel kind must be two_state_markov|frozen");
  cfg.channel.r = get_optional<double>(channel, "channel", "r", 0.0);
  cfg.channel.good_rates =
      get_required<std::vector<double>>(channel, "channel", "good_rates");
  if (cfg.channel.kind == ChannelKind::frozen) {
    const auto state = get_optional<std::vector<int>>(
        channel, "channel", "frozen_state",
        std::vector<int>(cfg.channel.good_rates.size(), 1));
    for (int bit : state)
      cfg.channel.frozen_state.push_back(bit ? 1 : 0);
  }

  const auto& arrivals = root.at("arrivals");
  require_keys(arrivals, "arrivals",
               {"kind", "mean", "max_per_slot", "batch_size"});
  const auto arrival_kind = get_required<std::string>(arrivals, "arrivals", "kind");
  if (arrival_kind == "bernoulli_batch")
    cfg.arrivals.kind = ArrivalKind::bernoulli_batch;
  else if (arrival_kind == "truncated_poisson")
    cfg.arrivals.kind = ArrivalKind::truncated_poisson;
  else
    throw ConfigError(
        "config: arrival kind must be bernoulli_batch|truncated_poisson");
  cfg.arrivals.mean =
      get_required<std::vector<double>>(arrivals, "arrivals", "mean");
  cfg.arrivals.max_per_slot =
      get_required<std::int64_t>(arrivals, "arrivals", "max_per_slot");
  cfg.arrivals.batch_size =
      get_optional<std::int64_t>(arrivals, "arrivals", "batch_size", 1);

  const auto& policy = root.at("policy");
  require_keys(policy, "policy", {"alpha", "rho", "zeta", "delta", "oracle"});
  cfg.policy.alpha = get_required<double>(policy, "policy", "alpha");
  cfg.policy.rho = get_required<double>(policy, "policy", "rho");
  cfg.policy.zeta = get_optional<double>(policy, "policy", "zeta", 0.0);
  cfg.policy.delta = get_optional<double>(policy, "policy", "delta", 1.0);
  const auto oracle = get_required<std::string>(policy, "policy", "oracle");
  if (oracle == "exact") cfg.policy.oracle = OracleKind::exact;
  else if (oracle == "uniform") cfg.policy.oracle = OracleKind::uniform;
  else if (oracle == "noisy_oracle") cfg.policy.oracle = OracleKind::noisy_oracle;
  else if (oracle == "greedy_matching")
    cfg.policy.oracle = OracleKind::greedy_matching;
  else
    throw ConfigError("config: unknown oracle kind '" + oracle + "'");

  cfg.horizon = get_required<std::int64_t>(root, "root", "horizon");
  cfg.warmup_fraction = get_optional<double>(root, "root", "warmup_fraction", 0.2);
  cfg.seeds = get_required<std::vector<std::uint64_t>>(root, "root", "seeds");
  cfg.trace = get_optional<bool>(root, "root", "trace", false);
  if (root.contains("stability")) {
    const auto& st = root.at("stability");
    require_keys(st, "stability",
                 {"stable_slope_factor", "unstable_slope_factor",
                  "quarter_ratio"});
    cfg.stability.stable_slope_factor = get_optional<double>(
        st, "stability", "stable_slope_factor", cfg.stability.stable_slope_factor);
    cfg.stability.unstable_slope_factor =
        get_optional<double>(st, "stability", "unstable_slope_factor",
                             cfg.stability.unstable_slope_factor);
    cfg.stability.quarter_ratio = get_optional<double>(
        st, "stability", "quarter_ratio", cfg.stability.quarter_ratio);
  }

  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  return parse_config(root);
}

inline std::string metrics_csv_header() {
  return "load,seed,horizon,verdict,queue_slope,total_queue_avg,"
         "avg_delay_slots,effective_load,rho_alpha_ok,trace_checksum";
}

inline std::string metrics_csv_row(const RunMetrics& m) {
  std::ostringstream out;
  out << format_double(m.load) << ',' << m.seed << ',' << m.horizon << ','
      << to_string(m.verdict) << ',' << format_double(m.queue_slope) << ','
      << format_double(m.total_queue_avg) << ','
      << (m.avg_delay_slots ? format_double(*m.avg_delay_slots) : "") << ','
      << format_double(m.effective_load) << ','
      << (m.rho_alpha_ok ? "1" : "0") << ',' << m.trace_checksum;
  return out.str();
}

inline std::string metrics_csv(const std::vector<RunMetrics>& rows) {
  std::ostringstream out;
  out << metrics_csv_header() << '\n';
  for (const auto& m : rows) out << metrics_csv_row(m) << '\n';
  return out.str();
}

inline nlohmann::json metrics_to_json(const RunMetrics& m) {
  nlohmann::json j;
  if (!std::isnan(m.load)) j["load"] = m.load;
  j["seed"] = m.seed;
  j["horizon"] = m.horizon;
  j["verdict"] = to_string(m.verdict);
  j["queue_slope"] = m.queue_slope;
  j["total_queue_avg"] = m.total_queue_avg;
  j["per_link_queue_avg"] = m.per_link_queue_avg;
  j["measured_arrival_rate"] = m.measured_arrival_rate;
  if (m.avg_delay_slots) j["avg_delay_slots"] = *m.avg_delay_slots;
  else j["avg_delay_slots"] = nullptr;
  if (!std::isnan(m.effective_load)) j["effective_load"] = m.effective_load;
  else j["effective_load"] = nullptr;
  j["rho_alpha_ok"] = m.rho_alpha_ok;
  j["trace_checksum"] = m.trace_checksum;
  return j;
}

inline std::string metrics_jsonl(const std::vector<RunMetrics>& rows) {
  std::ostringstream out;
  for (const auto& m : rows) out << metrics_to_json(m).dump() << '\n';
  return out.str();
}

inline nlohmann::json trace_to_json(const TraceRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.t;
  j["channel_mask"] = rec.channel_mask;
  j["candidate"] = rec.candidate;
  j["schedule"] = rec.schedule;
  j["phi"] = rec.phi;
  j["accept_prob"] = rec.accept_prob;
  j["accepted"] = rec.accepted;
  j["queue"] = *rec.queue;
  j["arrivals"] = *rec.arrivals;
  j["rates"] = *rec.rates;
  j["wasted"] = *rec.wasted;
  return j;
}

}  // namespace lmrsp
