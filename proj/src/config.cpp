#include "qflo/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qflo {

namespace {

using Json = nlohmann::json;

void require_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(path + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(path + "." + key + ": unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ConfigError(path + ": expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": cannot convert '" + node.Scalar() + "'");
  }
}

template <typename T>
void optional_scalar(const YAML::Node& parent, const std::string& path, const char* key, T& out) {
  if (auto child = parent[key]) out = scalar<T>(child, path + "." + key);
}

double positive(const YAML::Node& parent, const std::string& path, const char* key, double fallback) {
  double v = fallback;
  optional_scalar(parent, path, key, v);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path + "." + key + ": must be > 0");
  return v;
}

YAML::Node sequence(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path + ": expected a sequence");
  return node;
}

Link parse_link(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() != 2) throw ConfigError(path + ": expected [from, to]");
  return {scalar<int>(node[0], path + "[0]"), scalar<int>(node[1], path + "[1]")};
}

QosSpec parse_qos(const YAML::Node& node, const std::string& path, double default_theta) {
  QosSpec q;
  q.theta_hat = default_theta;
  if (!node) return q;
  require_keys(node, path, {"kind", "target_slots", "deadline_slots", "drop_ratio_target", "theta_hat"});
  const auto kind = node["kind"] ? scalar<std::string>(node["kind"], path + ".kind") : std::string("none");
  if (kind == "none") {
    q.kind = QosKind::kNone;
  } else if (kind == "mean_delay") {
    q.kind = QosKind::kMeanDelay;
    if (!node["target_slots"]) throw ConfigError(path + ".target_slots: required for mean_delay");
    q.target_slots = positive(node, path, "target_slots", 0.0);
  } else if (kind == "hard_deadline") {
    q.kind = QosKind::kHardDeadline;
    if (!node["deadline_slots"]) throw ConfigError(path + ".deadline_slots: required for hard_deadline");
    if (!node["drop_ratio_target"]) throw ConfigError(path + ".drop_ratio_target: required for hard_deadline");
    q.deadline_slots = positive(node, path, "deadline_slots", 0.0);
    q.drop_ratio_target = scalar<double>(node["drop_ratio_target"], path + ".drop_ratio_target");
    if (!(q.drop_ratio_target > 0.0 && q.drop_ratio_target < 1.0))
      throw ConfigError(path + ".drop_ratio_target: must lie in (0,1)");
  } else {
    throw ConfigError(path + ".kind: expected none, mean_delay or hard_deadline");
  }
  optional_scalar(node, path, "theta_hat", q.theta_hat);
  if (q.kind != QosKind::kNone && !(q.theta_hat > 1.0)) throw ConfigError(path + ".theta_hat: must be > 1");
  return q;
}

NetworkSpec parse_network(const YAML::Node& node, double default_theta) {
  const std::string path = "network";
  require_keys(node, path, {"nodes", "links", "flows", "interference_sets"});
  for (const char* key : {"nodes", "links", "flows"})
    if (!node[key]) throw ConfigError(path + "." + key + ": required");

  NetworkSpec net;
  const auto nodes = sequence(node["nodes"], path + ".nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = path + ".nodes[" + std::to_string(i) + "]";
    require_keys(nodes[i], p, {"id", "x", "y"});
    for (const char* key : {"id", "x", "y"})
      if (!nodes[i][key]) throw ConfigError(p + "." + key + ": required");
    Node n{scalar<int>(nodes[i]["id"], p + ".id"), scalar<double>(nodes[i]["x"], p + ".x"),
           scalar<double>(nodes[i]["y"], p + ".y")};
    if (n.x < 0.0 || n.x > 1.0 || n.y < 0.0 || n.y > 1.0) throw ConfigError(p + ": position must lie in the unit square");
    net.nodes.push_back(n);
  }

  const auto links = sequence(node["links"], path + ".links");
  for (std::size_t l = 0; l < links.size(); ++l)
    net.links.push_back(parse_link(links[l], path + ".links[" + std::to_string(l) + "]"));

  if (auto sets = node["interference_sets"]) {
    sequence(sets, path + ".interference_sets");
    for (std::size_t s = 0; s < sets.size(); ++s) {
      const std::string p = path + ".interference_sets[" + std::to_string(s) + "]";
      InterferenceSet set;
      for (std::size_t m = 0; m < sequence(sets[s], p).size(); ++m) {
        const auto link = parse_link(sets[s][m], p + "[" + std::to_string(m) + "]");
        const auto idx = net.find_link(link.from, link.to);
        if (!idx) throw ConfigError(p + "[" + std::to_string(m) + "]: not a link");
        set.push_back(*idx);
      }
      net.interference_sets.push_back(std::move(set));
    }
  }

  const auto flows = sequence(node["flows"], path + ".flows");
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const std::string p = path + ".flows[" + std::to_string(f) + "]";
    require_keys(flows[f], p, {"destination", "sources", "routes", "qos"});
    for (const char* key : {"destination", "sources", "routes"})
      if (!flows[f][key]) throw ConfigError(p + "." + key + ": required");
    Flow flow;
    flow.destination = scalar<int>(flows[f]["destination"], p + ".destination");
    const auto sources = sequence(flows[f]["sources"], p + ".sources");
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const std::string sp = p + ".sources[" + std::to_string(s) + "]";
      require_keys(sources[s], sp, {"node", "rate_pkts_per_slot"});
      if (!sources[s]["node"] || !sources[s]["rate_pkts_per_slot"]) throw ConfigError(sp + ": node and rate_pkts_per_slot required");
      flow.sources.push_back({scalar<int>(sources[s]["node"], sp + ".node"),
                              scalar<double>(sources[s]["rate_pkts_per_slot"], sp + ".rate_pkts_per_slot")});
    }
    const auto routes = sequence(flows[f]["routes"], p + ".routes");
    for (std::size_t r = 0; r < routes.size(); ++r) {
      const std::string rp = p + ".routes[" + std::to_string(r) + "]";
      std::vector<NodeId> route;
      for (std::size_t h = 0; h < sequence(routes[r], rp).size(); ++h)
        route.push_back(scalar<int>(routes[r][h], rp + "[" + std::to_string(h) + "]"));
      flow.routes.push_back(std::move(route));
    }
    flow.qos = parse_qos(flows[f]["qos"], p + ".qos", default_theta);
    net.flows.push_back(std::move(flow));
  }
  return net;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void validate(const SimConfig& c) {
  validate(c.network);
  validate(c.optimizer);
  if (!(c.channel.fading_scale > 0.0)) throw ConfigError("channel.fading_scale: must be > 0");
  if (!(c.channel.tx_power > 0.0)) throw ConfigError("channel.tx_power: must be > 0");
  if (!(c.channel.noise_power > 0.0)) throw ConfigError("channel.noise_power: must be > 0");
  if (c.channel.fixed_rate && !(*c.channel.fixed_rate >= 0.0)) throw ConfigError("channel.fixed_rate: must be >= 0");
  if (!(c.control.a1 > 0.0)) throw ConfigError("control.a1: must be > 0");
  if (!(c.control.a2 > 0.0)) throw ConfigError("control.a2: must be > 0");
  if (c.control.safety_stock < 0) throw ConfigError("control.safety_stock_pkts: must be >= 0");
  if (c.run.horizon < 0) throw ConfigError("run.horizon_slots: must be >= 0");
  if (c.run.seeds.empty()) throw ConfigError("run.seeds: at least one seed required");
}

SimConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError("config: malformed document at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("config: empty document");
  require_keys(root, "config", {"network", "channel", "optimizer", "control", "run"});
  if (!root["network"]) throw ConfigError("network: required section missing");

  SimConfig cfg;
  double default_theta = 2.0;
  if (auto ctl = root["control"]) {
    require_keys(ctl, "control", {"a1", "a2", "safety_stock_pkts", "theta_hat", "rate_rounding"});
    cfg.control.a1 = positive(ctl, "control", "a1", 1.0);
    cfg.control.a2 = positive(ctl, "control", "a2", 1.0);
    optional_scalar(ctl, "control", "safety_stock_pkts", cfg.control.safety_stock);
    if (cfg.control.safety_stock < 0) throw ConfigError("control.safety_stock_pkts: must be >= 0");
    optional_scalar(ctl, "control", "theta_hat", default_theta);
    if (!(default_theta > 1.0)) throw ConfigError("control.theta_hat: must be > 1");
    if (auto r = ctl["rate_rounding"]) {
      const auto v = scalar<std::string>(r, "control.rate_rounding");
      if (v == "floor") cfg.control.rounding = RateRounding::kFloor;
      else if (v == "probabilistic") cfg.control.rounding = RateRounding::kProbabilistic;
      else throw ConfigError("control.rate_rounding: expected floor or probabilistic");
    }
  }

  cfg.network = derive_interference_sets(parse_network(root["network"], default_theta));

  if (auto ch = root["channel"]) {
    require_keys(ch, "channel", {"fading_scale", "tx_power", "noise_power", "log_base", "gain_model", "fixed_rate"});
    cfg.channel.fading_scale = positive(ch, "channel", "fading_scale", 1.0);
    cfg.channel.tx_power = positive(ch, "channel", "tx_power", 1.0);
    cfg.channel.noise_power = positive(ch, "channel", "noise_power", 1.0);
    if (auto b = ch["log_base"]) {
      const auto v = scalar<std::string>(b, "channel.log_base");
      if (v == "e" || v == "natural") cfg.channel.log_base = LogBase::kNatural;
      else if (v == "2") cfg.channel.log_base = LogBase::kTwo;
      else throw ConfigError("channel.log_base: expected e or 2");
    }
    if (auto g = ch["gain_model"]) {
      const auto v = scalar<std::string>(g, "channel.gain_model");
      if (v == "amplitude_squared") cfg.channel.gain_model = GainModel::kAmplitudeSquared;
      else if (v == "power") cfg.channel.gain_model = GainModel::kPower;
      else throw ConfigError("channel.gain_model: expected amplitude_squared or power");
    }
    if (ch["fixed_rate"]) {
      double rate = 0.0;
      optional_scalar(ch, "channel", "fixed_rate", rate);
      cfg.channel.fixed_rate = rate;
    }
  }

  if (auto opt = root["optimizer"]) {
    require_keys(opt, "optimizer", {"step_size", "cycles", "projection_repeats", "init", "projection_divisor", "lower_bound"});
    cfg.optimizer.step_size = positive(opt, "optimizer", "step_size", 1e-4);
    optional_scalar(opt, "optimizer", "cycles", cfg.optimizer.cycles);
    optional_scalar(opt, "optimizer", "projection_repeats", cfg.optimizer.projection_repeats);
    if (auto i = opt["init"]) {
      const auto v = scalar<std::string>(i, "optimizer.init");
      if (v == "ones") cfg.optimizer.init = InitMode::kOnes;
      else if (v == "zeros") cfg.optimizer.init = InitMode::kZeros;
      else throw ConfigError("optimizer.init: expected ones or zeros");
    }
    if (auto d = opt["projection_divisor"]) {
      const auto v = scalar<std::string>(d, "optimizer.projection_divisor");
      if (v == "coordinates") cfg.optimizer.divisor = ProjectionDivisor::kCoordinates;
      else if (v == "links") cfg.optimizer.divisor = ProjectionDivisor::kLinks;
      else throw ConfigError("optimizer.projection_divisor: expected coordinates or links");
    }
    if (auto b = opt["lower_bound"]) {
      const auto v = scalar<std::string>(b, "optimizer.lower_bound");
      if (v == "zero") cfg.optimizer.lower = LowerBound::kZero;
      else if (v == "none") cfg.optimizer.lower = LowerBound::kNone;
      else throw ConfigError("optimizer.lower_bound: expected zero or none");
    }
  }

  if (auto run = root["run"]) {
    require_keys(run, "run", {"horizon_slots", "seeds", "trace", "oracle_gap"});
    optional_scalar(run, "run", "horizon_slots", cfg.run.horizon);
    optional_scalar(run, "run", "trace", cfg.run.trace);
    optional_scalar(run, "run", "oracle_gap", cfg.run.oracle_gap);
    if (auto seeds = run["seeds"]) {
      cfg.run.seeds.clear();
      for (std::size_t i = 0; i < sequence(seeds, "run.seeds").size(); ++i)
        cfg.run.seeds.push_back(scalar<std::uint64_t>(seeds[i], "run.seeds[" + std::to_string(i) + "]"));
    }
  }

  validate(cfg);
  build_link_flow_index(cfg.network);
  return cfg;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "flow,created,delivered,dropped,arrived,delay_sum_slots,mean_delay_slots,drop_ratio\n";
  for (const auto& f : report.flows) {
    os << f.flow << ',' << f.created << ',' << f.delivered << ',' << f.dropped << ',' << f.arrived() << ','
       << f.delay_sum << ',';
    if (auto m = f.mean_delay()) os << fixed(*m);
    os << ',';
    if (auto d = f.drop_ratio()) os << fixed(*d);
    os << '\n';
  }
  return os.str();
}

std::string metrics_to_json(const MetricsReport& report, const std::map<std::string, std::string>& provenance) {
  Json j;
  j["seed"] = report.seed;
  j["horizon_slots"] = report.horizon;
  if (!provenance.empty()) j["provenance"] = provenance;
  j["flows"] = Json::array();
  for (const auto& f : report.flows) {
    Json hist = Json::array();
    for (const auto& [delay, count] : f.delay_histogram) hist.push_back({delay, count});
    Json row{{"flow", f.flow},           {"created", f.created},   {"delivered", f.delivered},
             {"dropped", f.dropped},     {"delay_sum", f.delay_sum}, {"delay_histogram", hist}};
    row["mean_delay_slots"] = f.mean_delay() ? Json(*f.mean_delay()) : Json(nullptr);
    row["drop_ratio"] = f.drop_ratio() ? Json(*f.drop_ratio()) : Json(nullptr);
    j["flows"].push_back(std::move(row));
  }
  j["queues"] = Json::array();
  for (const auto& q : report.queues)
    j["queues"].push_back(
        {{"node", q.node}, {"flow", q.flow}, {"mean_length", q.mean_length}, {"final_length", q.final_length}});
  j["periods"] = Json::array();
  for (const auto& p : report.periods) {
    Json row{{"start", p.start},   {"length", p.length},           {"objective", p.objective},
             {"c3", p.c3},         {"projections", p.projections}, {"messages", p.messages}};
    row["oracle_gap"] = p.oracle_gap ? Json(*p.oracle_gap) : Json(nullptr);
    j["periods"].push_back(std::move(row));
  }
  return j.dump(1) + "\n";
}

MetricsReport metrics_from_json(std::string_view text) {
  const Json j = Json::parse(text);
  MetricsReport r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.horizon = j.at("horizon_slots").get<Slot>();
  for (const auto& row : j.at("flows")) {
    FlowMetrics f;
    f.flow = row.at("flow").get<FlowId>();
    f.created = row.at("created").get<std::int64_t>();
    f.delivered = row.at("delivered").get<std::int64_t>();
    f.dropped = row.at("dropped").get<std::int64_t>();
    f.delay_sum = row.at("delay_sum").get<std::int64_t>();
    for (const auto& bin : row.at("delay_histogram"))
      f.delay_histogram[bin.at(0).get<std::int64_t>()] = bin.at(1).get<std::int64_t>();
    r.flows.push_back(std::move(f));
  }
  for (const auto& row : j.at("queues"))
    r.queues.push_back({row.at("node").get<NodeId>(), row.at("flow").get<FlowId>(),
                        row.at("mean_length").get<double>(), row.at("final_length").get<std::int64_t>()});
  for (const auto& row : j.at("periods")) {
    PeriodDiagnostics p;
    p.start = row.at("start").get<Slot>();
    p.length = row.at("length").get<Slot>();
    p.objective = row.at("objective").get<double>();
    p.c3 = row.at("c3").get<double>();
    if (!row.at("oracle_gap").is_null()) p.oracle_gap = row.at("oracle_gap").get<double>();
    p.projections = row.at("projections").get<std::int64_t>();
    p.messages = row.at("messages").get<std::int64_t>();
    r.periods.push_back(p);
  }
  return r;
}

void write_text_file(const std::filesystem::path& out, const std::string& text) {
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + out.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + out.string());
}

void export_metrics(const MetricsReport& report, ExportFormat format, const std::filesystem::path& out,
                    const std::map<std::string, std::string>& provenance) {
  if (format == ExportFormat::kJson) {
    write_text_file(out, metrics_to_json(report, provenance));
    return;
  }
  std::string text;
  for (const auto& [k, v] : provenance) text += "# " + k + "=" + v + "\n";
  write_text_file(out, text + metrics_to_csv(report));
}

}  // namespace qflo
