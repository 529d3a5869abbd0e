#include "gridres/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/error.hpp"

namespace gridres {

using nlohmann::json;

void BenchmarkSet::validate() const {
  if (events.empty()) throw Error(ErrorCode::empty_benchmark, "benchmark set is empty");
  const std::size_t dim = events.front().features.dim;
  for (const auto& e : events) {
    if (e.features.dim != dim) throw Error(ErrorCode::dimension_mismatch, "benchmark events differ in feature width");
  }
}

std::vector<SystemEvaluation> evaluate_benchmark(const SurrogateModel& model, const std::vector<std::string>& systems,
                                                 const BenchmarkSet& benchmark, EvaluationStats* stats) {
  benchmark.validate();
  std::vector<Sequence> inputs;
  inputs.reserve(benchmark.events.size());
  for (const auto& e : benchmark.events) inputs.push_back(model_input(e, model.time_embedding()));

  std::vector<SystemEvaluation> out;
  for (const auto& id : systems) {
    const int k = model.system_index(id);
    PredictStats ps;
    SystemEvaluation eval;
    eval.system_id = id;
    eval.scores = predict_batch(model, inputs, k, &ps);
    eval.ru = unweighted_resilience(std::span<const double>(eval.scores)).value();
    if (stats) stats->clamped_values += ps.clamped_values;
    out.push_back(std::move(eval));
  }
  return out;
}

ProfileTable parse_profiles(const csv::Table& table, double lambda) {
  const std::size_t c_sys = table.column("system_id");
  std::array<std::size_t, kFactorCount> cols{};
  for (std::size_t i = 0; i < kFactorCount; ++i) cols[i] = table.column(fmt::format("f{:02}", i + 1));
  ProfileTable out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    VulnerabilityProfile p;
    p.system_id = table.rows[r][c_sys];
    p.lambda = lambda;
    for (std::size_t i = 0; i < kFactorCount; ++i) p.factors[i] = csv::to_double(table, r, cols[i]);
    try {
      p.validate();
    } catch (const Error& e) {
      csv::fail(table, r, e.what());
    }
    if (!out.emplace(p.system_id, p).second) csv::fail(table, r, "duplicate system_id");
  }
  return out;
}

std::vector<int> descending_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<int> ranks(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranks[order[i]] = static_cast<int>(i + 1);
  return ranks;
}

namespace {

std::optional<SpearmanResult> try_spearman(const std::vector<double>& x, const std::vector<double>& y,
                                           const PermutationOptions& permutation) {
  if (x.size() < 3) return std::nullopt;
  try {
    return spearman_rho(x, y, permutation);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::undefined_correlation) return std::nullopt;
    throw;
  }
}

}  // namespace

ResilienceReport rank_systems(const std::vector<SystemEvaluation>& evaluations, const ProfileTable& profiles,
                              const WeightScheme& scheme, const PermutationOptions& permutation) {
  validate(scheme);
  std::vector<const SystemEvaluation*> sorted;
  for (const auto& e : evaluations) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const SystemEvaluation* a, const SystemEvaluation* b) { return a->system_id < b->system_id; });

  ResilienceReport report;
  report.scheme = scheme_name(scheme);
  std::vector<double> ru, rw;
  for (const SystemEvaluation* e : sorted) {
    auto it = profiles.find(e->system_id);
    if (it == profiles.end()) {
      throw Error(ErrorCode::missing_profile, fmt::format("no vulnerability profile for system '{}'", e->system_id));
    }
    ReportRow row;
    row.system_id = e->system_id;
    row.ru = e->ru;
    row.rw = weighted_resilience(ResilienceScore(e->ru), it->second, scheme).value();
    row.scores = e->scores;
    ru.push_back(row.ru);
    rw.push_back(row.rw);
    report.rows.push_back(std::move(row));
  }
  const auto rank_ru = descending_ranks(ru);
  const auto rank_rw = descending_ranks(rw);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    report.rows[i].rank_ru = rank_ru[i];
    report.rows[i].rank_rw = rank_rw[i];
  }
  report.ru_rw_correlation = try_spearman(ru, rw, permutation);
  return report;
}

void correlate_with_truth(ResilienceReport& report, const std::map<std::string, double>& truth,
                          const PermutationOptions& permutation) {
  std::vector<double> t, p;
  for (const auto& row : report.rows) {
    auto it = truth.find(row.system_id);
    if (it == truth.end()) continue;
    t.push_back(it->second);
    p.push_back(row.ru);
  }
  report.truth_correlation = try_spearman(t, p, permutation);
}

void write_report_csv(std::ostream& out, const ResilienceReport& report) {
  out << "system_id,ru,rw,rank_ru,rank_rw,der_watts\n";
  for (const auto& r : report.rows) {
    out << fmt::format("{},{},{},{},{},{}\n", r.system_id, csv::format_report(r.ru), csv::format_report(r.rw),
                       r.rank_ru, r.rank_rw, r.der_watts ? csv::format_report(*r.der_watts) : std::string());
  }
}

namespace {

json spearman_json(const std::optional<SpearmanResult>& s) {
  if (!s) return nullptr;
  return {{"rho", s->rho}, {"p_value", s->p_value}};
}

std::optional<SpearmanResult> spearman_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return SpearmanResult{j.at("rho").get<double>(), j.at("p_value").get<double>()};
}

}  // namespace

json report_to_json(const ResilienceReport& report) {
  json doc;
  doc["schema"] = "gridres.report/1";
  doc["scheme"] = report.scheme;
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"system_id", r.system_id},
                    {"ru", r.ru},
                    {"rw", r.rw},
                    {"rank_ru", r.rank_ru},
                    {"rank_rw", r.rank_rw},
                    {"der_watts", r.der_watts ? json(*r.der_watts) : json(nullptr)},
                    {"scores", r.scores}});
  }
  doc["systems"] = std::move(rows);
  doc["ru_rw_spearman"] = spearman_json(report.ru_rw_correlation);
  doc["truth_spearman"] = spearman_json(report.truth_correlation);
  return doc;
}

ResilienceReport report_from_json(const json& doc) {
  try {
    if (doc.at("schema") != "gridres.report/1") throw Error(ErrorCode::schema_mismatch, "report schema must be 'gridres.report/1'");
    ResilienceReport report;
    report.scheme = doc.at("scheme").get<std::string>();
    for (const auto& r : doc.at("systems")) {
      ReportRow row;
      row.system_id = r.at("system_id").get<std::string>();
      row.ru = r.at("ru").get<double>();
      row.rw = r.at("rw").get<double>();
      row.rank_ru = r.at("rank_ru").get<int>();
      row.rank_rw = r.at("rank_rw").get<int>();
      if (!r.at("der_watts").is_null()) row.der_watts = r.at("der_watts").get<double>();
      row.scores = r.at("scores").get<std::vector<double>>();
      report.rows.push_back(std::move(row));
    }
    report.ru_rw_correlation = spearman_from(doc.at("ru_rw_spearman"));
    report.truth_correlation = spearman_from(doc.at("truth_spearman"));
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_mismatch, fmt::format("report: {}", e.what()));
  }
}

}  // namespace gridres
