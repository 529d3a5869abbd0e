#include "gridres/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/checkpoint.hpp"
#include "gridres/error.hpp"
#include "json_reader.hpp"

namespace gridres {

using nlohmann::json;
using detail::JsonObjectReader;

namespace {

bool same_scheme(const WeightScheme& a, const WeightScheme& b) {
  if (a.index() != b.index()) return false;
  if (auto* g = std::get_if<GroupEmphasis>(&a)) return g->multipliers == std::get<GroupEmphasis>(b).multipliers;
  if (auto* c = std::get_if<ConcentrationPenalty>(&a)) {
    const auto& d = std::get<ConcentrationPenalty>(b);
    return c->threshold == d.threshold && c->penalty == d.penalty;
  }
  return true;
}

bool same_grid(const GridSearchSpace& a, const GridSearchSpace& b) {
  return a.gru_hidden == b.gru_hidden && a.gru_layers == b.gru_layers && a.mlp_layers == b.mlp_layers &&
         a.learning_rate == b.learning_rate && a.weight_decay == b.weight_decay && a.mlp_dropout == b.mlp_dropout;
}

json range_json(const IntRange& r) { return json::array({r.lo, r.hi}); }

void read_range(JsonObjectReader& r, const char* key, IntRange& out) {
  std::array<int, 2> v{out.lo, out.hi};
  r.get(key, v);
  out = {v[0], v[1]};
}

template <typename F>
void section(const std::string& path, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_error) throw;
    throw Error(ErrorCode::config_error, fmt::format("{}: {}", path, e.what()));
  }
}

const char* protocol_name(TrainProtocol p) { return p == TrainProtocol::kfold ? "kfold" : "stratified"; }

}  // namespace

bool TrainingSettings::operator==(const TrainingSettings& o) const {
  return protocol == o.protocol && folds == o.folds && fractions == o.fractions && time_embedding == o.time_embedding &&
         same_grid(grid, o.grid);
}

bool RunConfig::operator==(const RunConfig& o) const {
  return schema_version == o.schema_version && seed == o.seed && workers == o.workers && topology == o.topology &&
         simulation.episodes == o.simulation.episodes && simulation.episode == o.simulation.episode &&
         surrogate == o.surrogate && training == o.training && metrics.lambda == o.metrics.lambda &&
         same_scheme(metrics.scheme, o.metrics.scheme) &&
         metrics.permutation_iterations == o.metrics.permutation_iterations && planning.pu == o.planning.pu &&
         planning.target == o.planning.target && planning.mode == o.planning.mode && ingest.scale == o.ingest.scale &&
         ingest.rules.threshold == o.ingest.rules.threshold &&
         ingest.rules.merge_gap_hours == o.ingest.rules.merge_gap_hours &&
         ingest.rules.min_duration_hours == o.ingest.rules.min_duration_hours &&
         ingest.min_events == o.ingest.min_events && ingest.exclude_systems == o.ingest.exclude_systems;
}

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw Error(ErrorCode::config_error,
                fmt::format("schema_version: expected {}, got {}", kConfigSchemaVersion, schema_version));
  }
  if (workers < 1) throw Error(ErrorCode::config_error, "workers: must be >= 1");
  section("topology", [&] { topology.validate(); });
  section("simulation", [&] {
    if (simulation.episodes < 1) throw Error(ErrorCode::invalid_argument, "episodes must be >= 1");
    simulation.episode.validate();
  });
  if (simulation.episode.recovery.n_teams > topology.n_service_areas) {
    throw Error(ErrorCode::config_error,
                fmt::format("simulation.recovery.n_teams: {} teams exceed {} service areas",
                            simulation.episode.recovery.n_teams, topology.n_service_areas));
  }
  section("surrogate", [&] { surrogate.validate(); });
  section("training", [&] {
    if (training.folds < 2) throw Error(ErrorCode::invalid_argument, "folds must be >= 2");
    double sum = 0.0;
    for (double f : training.fractions) {
      if (!(f >= 0.0)) throw Error(ErrorCode::invalid_argument, "fractions must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::invalid_argument, "fractions must sum to 1");
  });
  section("metrics", [&] {
    if (!(metrics.lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be > 0");
    if (metrics.permutation_iterations < 0) throw Error(ErrorCode::invalid_argument, "permutation_iterations must be >= 0");
    gridres::validate(metrics.scheme);
  });
  section("planning", [&] {
    if (!(planning.pu > 0.0)) throw Error(ErrorCode::invalid_argument, "pu must be > 0");
    if (!(planning.target > 0.0 && planning.target <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "target must lie in (0, 1]");
    }
  });
  section("ingest", [&] {
    if (!(ingest.scale > 0.0)) throw Error(ErrorCode::invalid_argument, "scale must be > 0");
    if (ingest.rules.merge_gap_hours < 0 || ingest.rules.min_duration_hours < 1 || ingest.min_events < 1) {
      throw Error(ErrorCode::invalid_argument, "merge_gap_hours >= 0, min_duration_hours >= 1, min_events >= 1");
    }
  });
}

json scheme_to_json(const WeightScheme& scheme) {
  if (auto* g = std::get_if<GroupEmphasis>(&scheme)) return {{"kind", "group_emphasis"}, {"multipliers", g->multipliers}};
  if (auto* c = std::get_if<ConcentrationPenalty>(&scheme)) {
    return {{"kind", "concentration_penalty"}, {"threshold", c->threshold}, {"penalty", c->penalty}};
  }
  return {{"kind", "plain"}};
}

json to_json(const RunConfig& c) {
  json doc;
  doc["schema_version"] = c.schema_version;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  const auto& t = c.topology;
  doc["topology"] = {{"n_service_areas", t.n_service_areas},
                     {"poles_per_area", range_json(t.poles_per_area)},
                     {"buildings_per_area", range_json(t.buildings_per_area)},
                     {"area_spacing_km", t.area_spacing_km},
                     {"mean_customers_per_building", t.mean_customers_per_building},
                     {"building_area_sigma", t.building_area_sigma},
                     {"tree_cover_mean", t.tree_cover_mean},
                     {"tree_cover_spread", t.tree_cover_spread},
                     {"tree_cover_area_spread", t.tree_cover_area_spread},
                     {"neighbor_k", t.neighbor_k}};
  const auto& e = c.simulation.episode;
  doc["simulation"] = {
      {"episodes", c.simulation.episodes},
      {"window", to_string(e.window)},
      {"hazard",
       {{"storm_hours", range_json(e.hazard.storm_hours)},
        {"gust_count", range_json(e.hazard.gust_count)},
        {"gust_area_probability", e.hazard.gust_area_probability},
        {"gust", {{"mu", e.hazard.winds.gust.mu}, {"sigma", e.hazard.winds.gust.sigma}}},
        {"sustained", {{"mu", e.hazard.winds.sustained.mu}, {"sigma", e.hazard.winds.sustained.sigma}}},
        {"patch_size_km", e.hazard.patch_size_km},
        {"idw_power", e.hazard.idw_power}}},
      {"fragility",
       {{"wind",
         {{"midpoint", e.fragility.wind.midpoint},
          {"steepness", e.fragility.wind.steepness},
          {"p_max", e.fragility.wind.p_max}}},
        {"tree",
         {{"coupling", e.fragility.tree.coupling},
          {"activation", e.fragility.tree.activation},
          {"slope", e.fragility.tree.slope}}}}},
      {"recovery", {{"n_teams", e.recovery.n_teams}, {"repair_hours", range_json(e.recovery.repair_hours)}}}};
  doc["surrogate"] = config_to_json(c.surrogate);
  const auto& g = c.training.grid;
  doc["training"] = {{"protocol", protocol_name(c.training.protocol)},
                     {"folds", c.training.folds},
                     {"fractions", c.training.fractions},
                     {"time_embedding", c.training.time_embedding},
                     {"grid",
                      {{"gru_hidden", g.gru_hidden},
                       {"gru_layers", g.gru_layers},
                       {"mlp_layers", g.mlp_layers},
                       {"learning_rate", g.learning_rate},
                       {"weight_decay", g.weight_decay},
                       {"mlp_dropout", g.mlp_dropout}}}};
  doc["metrics"] = {{"lambda", c.metrics.lambda},
                    {"scheme", scheme_to_json(c.metrics.scheme)},
                    {"permutation_iterations", c.metrics.permutation_iterations}};
  doc["planning"] = {{"pu", c.planning.pu}, {"target", c.planning.target}, {"mode", to_string(c.planning.mode)}};
  doc["ingest"] = {{"scale", c.ingest.scale},
                   {"threshold", c.ingest.rules.threshold},
                   {"merge_gap_hours", c.ingest.rules.merge_gap_hours},
                   {"min_duration_hours", c.ingest.rules.min_duration_hours},
                   {"min_events", c.ingest.min_events},
                   {"exclude_systems", c.ingest.exclude_systems}};
  return doc;
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig c;
  JsonObjectReader root(doc, "");
  root.require("schema_version", c.schema_version);
  if (c.schema_version != kConfigSchemaVersion) {
    root.fail("schema_version", fmt::format("expected {}, got {}", kConfigSchemaVersion, c.schema_version));
  }
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  root.object("topology", [&](JsonObjectReader& r) {
    auto& t = c.topology;
    r.get("n_service_areas", t.n_service_areas);
    read_range(r, "poles_per_area", t.poles_per_area);
    read_range(r, "buildings_per_area", t.buildings_per_area);
    r.get("area_spacing_km", t.area_spacing_km);
    r.get("mean_customers_per_building", t.mean_customers_per_building);
    r.get("building_area_sigma", t.building_area_sigma);
    r.get("tree_cover_mean", t.tree_cover_mean);
    r.get("tree_cover_spread", t.tree_cover_spread);
    r.get("tree_cover_area_spread", t.tree_cover_area_spread);
    r.get("neighbor_k", t.neighbor_k);
  });
  root.object("simulation", [&](JsonObjectReader& r) {
    auto& e = c.simulation.episode;
    r.get("episodes", c.simulation.episodes);
    std::string window = to_string(e.window);
    r.get("window", window);
    try {
      e.window = window_mode_from_string(window);
    } catch (const Error& err) {
      r.fail(r.field("window"), err.what());
    }
    r.object("hazard", [&](JsonObjectReader& h) {
      read_range(h, "storm_hours", e.hazard.storm_hours);
      read_range(h, "gust_count", e.hazard.gust_count);
      h.get("gust_area_probability", e.hazard.gust_area_probability);
      h.object("gust", [&](JsonObjectReader& d) {
        d.get("mu", e.hazard.winds.gust.mu);
        d.get("sigma", e.hazard.winds.gust.sigma);
      });
      h.object("sustained", [&](JsonObjectReader& d) {
        d.get("mu", e.hazard.winds.sustained.mu);
        d.get("sigma", e.hazard.winds.sustained.sigma);
      });
      h.get("patch_size_km", e.hazard.patch_size_km);
      h.get("idw_power", e.hazard.idw_power);
    });
    r.object("fragility", [&](JsonObjectReader& f) {
      f.object("wind", [&](JsonObjectReader& w) {
        w.get("midpoint", e.fragility.wind.midpoint);
        w.get("steepness", e.fragility.wind.steepness);
        w.get("p_max", e.fragility.wind.p_max);
      });
      f.object("tree", [&](JsonObjectReader& t) {
        t.get("coupling", e.fragility.tree.coupling);
        t.get("activation", e.fragility.tree.activation);
        t.get("slope", e.fragility.tree.slope);
      });
    });
    r.object("recovery", [&](JsonObjectReader& rc) {
      rc.get("n_teams", e.recovery.n_teams);
      read_range(rc, "repair_hours", e.recovery.repair_hours);
    });
  });
  if (const json* s = root.raw("surrogate")) c.surrogate = config_from_json(*s, "surrogate");
  root.object("training", [&](JsonObjectReader& r) {
    std::string protocol = protocol_name(c.training.protocol);
    r.get("protocol", protocol);
    if (protocol == "kfold") {
      c.training.protocol = TrainProtocol::kfold;
    } else if (protocol == "stratified") {
      c.training.protocol = TrainProtocol::stratified;
    } else {
      r.fail(r.field("protocol"), fmt::format("unknown protocol '{}'", protocol));
    }
    r.get("folds", c.training.folds);
    r.get("fractions", c.training.fractions);
    r.get("time_embedding", c.training.time_embedding);
    r.object("grid", [&](JsonObjectReader& g) {
      g.get("gru_hidden", c.training.grid.gru_hidden);
      g.get("gru_layers", c.training.grid.gru_layers);
      g.get("mlp_layers", c.training.grid.mlp_layers);
      g.get("learning_rate", c.training.grid.learning_rate);
      g.get("weight_decay", c.training.grid.weight_decay);
      g.get("mlp_dropout", c.training.grid.mlp_dropout);
    });
  });
  root.object("metrics", [&](JsonObjectReader& r) {
    r.get("lambda", c.metrics.lambda);
    r.get("permutation_iterations", c.metrics.permutation_iterations);
    r.object("scheme", [&](JsonObjectReader& s) {
      std::string kind = "plain";
      s.require("kind", kind);
      if (kind == "plain") {
        c.metrics.scheme = PlainSum{};
      } else if (kind == "group_emphasis") {
        GroupEmphasis g = vulnerable_group_emphasis();
        s.get("multipliers", g.multipliers);
        c.metrics.scheme = g;
      } else if (kind == "concentration_penalty") {
        ConcentrationPenalty p;
        s.get("threshold", p.threshold);
        s.get("penalty", p.penalty);
        c.metrics.scheme = p;
      } else {
        s.fail(s.field("kind"), fmt::format("unknown scheme '{}'", kind));
      }
    });
  });
  root.object("planning", [&](JsonObjectReader& r) {
    r.get("pu", c.planning.pu);
    r.get("target", c.planning.target);
    std::string mode = to_string(c.planning.mode);
    r.get("mode", mode);
    try {
      c.planning.mode = planning_mode_from_string(mode);
    } catch (const Error& err) {
      r.fail(r.field("mode"), err.what());
    }
  });
  root.object("ingest", [&](JsonObjectReader& r) {
    r.get("scale", c.ingest.scale);
    r.get("threshold", c.ingest.rules.threshold);
    r.get("merge_gap_hours", c.ingest.rules.merge_gap_hours);
    r.get("min_duration_hours", c.ingest.rules.min_duration_hours);
    r.get("min_events", c.ingest.min_events);
    r.get("exclude_systems", c.ingest.exclude_systems);
  });
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot read config '{}'", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("{}: {}", path, e.what()));
  }
  return run_config_from_json(doc);
}

std::string dump_run_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace gridres
