#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "gridres/csv.hpp"
#include "gridres/error.hpp"
#include "gridres/ingest.hpp"
#include "gridres/timeutil.hpp"
#include "oracles.hpp"

using namespace gridres;
using namespace gridres::ingest;

namespace {

constexpr std::int64_t kFixtureStart = 451416;  // 2021-07-01T00Z in epoch hours

NormalizedOutageSeries series(std::vector<double> values, std::int64_t start = 0) {
  NormalizedOutageSeries s;
  s.system_id = "x";
  for (std::size_t i = 0; i < values.size(); ++i) s.hours.push_back(start + static_cast<std::int64_t>(i));
  s.values = std::move(values);
  return s;
}

double rs_of(const std::vector<double>& fraction_out) {
  std::vector<double> f;
  for (double v : fraction_out) f.push_back(1.0 - v);
  return oracle::trapezoid(f);
}

csv::Table table(const std::string& text) {
  std::istringstream in(text);
  return csv::read(in, "inline.csv");
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("timestamps") {
  using timeutil::parse_rfc3339_minutes;
  CHECK(parse_rfc3339_minutes("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_rfc3339_minutes("2021-07-01T00:00:00Z") == kFixtureStart * 60);
  CHECK(parse_rfc3339_minutes("2021-07-01T02:30:00+02:00") == kFixtureStart * 60 + 30);
  CHECK(parse_rfc3339_minutes("2021-07-01T00:00:59.9Z") == kFixtureStart * 60);
  CHECK_FALSE(parse_rfc3339_minutes("2021-13-01T00:00:00Z").has_value());
  CHECK_FALSE(parse_rfc3339_minutes("yesterday").has_value());
  CHECK(timeutil::format_rfc3339_hour(kFixtureStart) == "2021-07-01T00:00:00Z");
  CHECK(timeutil::year_of_epoch_hour(kFixtureStart) == 2021);
  CHECK(timeutil::day_of_year(kFixtureStart) == 182);
  for (std::int64_t d = -1000; d < 30000; d += 37) {
    const auto c = timeutil::civil_from_days(d);
    REQUIRE(timeutil::days_from_civil(c.year, c.month, c.day) == d);
  }
}

TEST_CASE("downsample examples") {
  RawOutageSeries raw{"x", {0, 15, 30, 45}, {100, 100, 100, 100}};
  auto h = downsample_hourly(raw);
  REQUIRE(h.values.size() == 1);
  CHECK(h.values[0] == 100);

  raw.customers_out = {0, 50, 200, 100};
  CHECK(downsample_hourly(raw).values == std::vector<double>{200});

  raw = {"x", {0, 15, 30, 45, 60, 75, 90, 105}, {1, 2, 3, 4, 5, 6, 7, 8}};
  h = downsample_hourly(raw);
  CHECK(h.hours == std::vector<std::int64_t>{0, 1});
  CHECK(h.values == std::vector<double>{4, 8});

  raw = {"x", {0, 7}, {1, 1}};
  CHECK_THROWS_AS(downsample_hourly(raw), Error);
}

TEST_CASE("normalize examples") {
  HourlySeries h{"x", {0, 1, 2}, {150, 0, 2000}};
  const auto n = normalize_outages(h, 3000, 2.0);
  CHECK(n.values[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(n.values[1] == 0.0);
  CHECK(n.values[2] == 1.0);
}

TEST_CASE("extract examples") {
  CHECK(extract_events(series(std::vector<double>(24, 0.05))).empty());

  std::vector<double> eight(8, 0.3);
  eight.resize(12, 0.0);
  auto ev = extract_events(series(eight));
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].duration_hours() == 8);

  std::vector<double> v(14, 0.0);
  for (int h = 0; h <= 5; ++h) v[static_cast<std::size_t>(h)] = 0.2;
  for (int h = 8; h <= 13; ++h) v[static_cast<std::size_t>(h)] = 0.5;
  ev = extract_events(series(v));
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].start_hour == 0);
  CHECK(ev[0].end_hour == 13);
  CHECK(ev[0].fraction_out[6] == doctest::Approx(0.3));
  CHECK(ev[0].fraction_out[7] == doctest::Approx(0.4));
  CHECK(ev[0].curve.samples.size() == 14);
}

TEST_CASE("interior gaps with missing hours are interpolated") {
  NormalizedOutageSeries s;
  s.system_id = "x";
  s.hours = {0, 1, 2, 3, 4, 5, 6, 9, 10};
  s.values = {0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.8, 0.8};
  auto ev = extract_events(s);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].fraction_out.size() == 11);
  CHECK(ev[0].fraction_out[7] == doctest::Approx(0.4));
  CHECK(ev[0].fraction_out[8] == doctest::Approx(0.6));
}

TEST_CASE("event scores") {
  auto ev = extract_events(series(std::vector<double>(6, 0.5)));
  REQUIRE(ev.size() == 1);
  CHECK(events_to_scores(ev)[0].rs.value() == doctest::Approx(0.5).epsilon(1e-15));

  OutageEvent e;
  e.system_id = "x";
  e.start_hour = 0;
  e.end_hour = 3;
  e.fraction_out = {0.1, 0.9, 0.9, 0.1};
  e.curve.samples = {0.9, 0.1, 0.1, 0.9};
  CHECK(events_to_scores({e})[0].rs.value() == doctest::Approx((0.5 + 0.1 + 0.5) / 3.0).epsilon(1e-14));
  CHECK(events_to_scores({}).empty());
}

TEST_CASE("filter examples") {
  EventGroups g;
  g["one"].resize(1);
  g["two"].resize(2);
  auto kept = filter_systems(g, 2);
  CHECK(kept.size() == 1);
  CHECK(kept.count("two") == 1);
  CHECK(filter_systems(g, 1).size() == 2);
}

TEST_CASE("extraction properties") {
  RngStream rng(8, 8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v;
    const int n = static_cast<int>(rng.uniform_int(1, 120));
    double level = 0.0;
    for (int i = 0; i < n; ++i) {
      if (rng.bernoulli(0.15)) level = rng.bernoulli(0.5) ? rng.uniform(0.0, 0.09) : rng.uniform(0.1, 1.0);
      v.push_back(level);
    }
    const auto s = series(v, 1000);
    const auto ev = extract_events(s);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      REQUIRE(ev[i].start_hour <= ev[i].end_hour);
      REQUIRE(ev[i].duration_hours() >= 6);
      if (i > 0) REQUIRE(ev[i - 1].end_hour < ev[i].start_hour);
      const auto again = extract_events(series(ev[i].fraction_out, ev[i].start_hour));
      REQUIRE(again.size() == 1);
      REQUIRE(again[0].start_hour == ev[i].start_hour);
      REQUIRE(again[0].fraction_out == ev[i].fraction_out);
    }
  }
}

TEST_CASE("raising the threshold never adds plateau events") {
  RngStream rng(9, 1);
  EventRules rules;
  rules.merge_gap_hours = 0;
  rules.min_duration_hours = 1;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v;
    const int blocks = static_cast<int>(rng.uniform_int(0, 10));
    for (int b = 0; b < blocks; ++b) {
      v.insert(v.end(), static_cast<std::size_t>(rng.uniform_int(1, 10)), rng.uniform());
      v.insert(v.end(), static_cast<std::size_t>(rng.uniform_int(1, 5)), 0.0);
    }
    const auto s = series(v);
    std::size_t previous = SIZE_MAX;
    for (double t = 0.05; t < 1.0; t += 0.05) {
      rules.threshold = t;
      const auto n = extract_events(s, rules).size();
      REQUIRE(n <= previous);
      previous = n;
    }
  }
}

TEST_CASE("population falls back to the nearest year") {
  PopulationTable p;
  p.set("a", 2019, 10);
  p.set("a", 2023, 20);
  CHECK(p.lookup("a", 2019) == 10);
  CHECK(p.lookup("a", 2010) == 10);
  CHECK(p.lookup("a", 2021) == 10);
  CHECK(p.lookup("a", 2022) == 20);
  CHECK(p.lookup("a", 2030) == 20);
  CHECK_THROWS_AS(p.lookup("b", 2020), Error);
}

TEST_CASE("three-system fixture") {
  const auto raw = parse_outage_table(csv::read_file(GRIDRES_FIXTURE_DIR "/outages_3sys.csv"));
  const auto pop = parse_population_table(csv::read_file(GRIDRES_FIXTURE_DIR "/population_3sys.csv"));
  REQUIRE(raw.size() == 3);

  const auto b_hourly = normalize_outages(downsample_hourly(raw.at("B")), 2000, 2.0);
  const auto b_events = extract_events(b_hourly);
  REQUIRE(b_events.size() == 1);
  CHECK(b_events[0].start_hour == kFixtureStart + 10);
  CHECK(b_events[0].end_hour == kFixtureStart + 22);

  const auto result = run_pipeline(raw, pop, IngestOptions{});
  CHECK(result.systems_seen == 3);
  CHECK(result.dropped_systems == std::vector<std::string>{"B"});
  REQUIRE(result.events.size() == 2);

  struct Expected {
    std::string system;
    std::int64_t start, end;
    std::vector<double> fraction;
  };
  const double g1 = 0.3 + 0.2 / 3.0, g2 = 0.3 + 0.4 / 3.0;
  const std::vector<Expected> expected{
      {"A", 0, 7, {0.2, 0.4, 0.6, 0.4, 0.2, 0.2, 0.2, 0.2}},
      {"A", 30, 39, {0.3, 0.3, 0.3, 0.3, g1, g2, 0.5, 0.5, 0.5, 0.5}},
      {"C", 0, 5, std::vector<double>(6, 0.1)},
      {"C", 10, 15, std::vector<double>(6, 0.6)},
      {"C", 20, 25, std::vector<double>(6, 0.8)},
  };
  REQUIRE(result.scores.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& e = expected[i];
    const auto& s = result.scores[i];
    INFO("event " << i);
    CHECK(s.system_id == e.system);
    CHECK(s.start_hour == kFixtureStart + e.start);
    CHECK(s.end_hour == kFixtureStart + e.end);
    CHECK(std::abs(s.rs.value() - rs_of(e.fraction)) <= 1e-12);
  }
  CHECK(result.scores[1].event_id == 1);
  CHECK(result.scores[2].event_id == 0);

  IngestOptions excl;
  excl.exclude_systems = {"C"};
  const auto r2 = run_pipeline(raw, pop, excl);
  CHECK(r2.excluded_systems == std::vector<std::string>{"C"});
  CHECK(r2.scores.size() == 2);
}

TEST_CASE("scores csv round trip") {
  const auto raw = parse_outage_table(csv::read_file(GRIDRES_FIXTURE_DIR "/outages_3sys.csv"));
  const auto pop = parse_population_table(csv::read_file(GRIDRES_FIXTURE_DIR "/population_3sys.csv"));
  const auto result = run_pipeline(raw, pop, IngestOptions{});
  std::ostringstream out;
  write_scores_csv(out, result.scores);
  CHECK(out.str().rfind("system_id,event_id,start_hour,end_hour,rs\n", 0) == 0);
  const auto back = parse_scores_table(table(out.str()));
  REQUIRE(back.size() == result.scores.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].rs.value() == result.scores[i].rs.value());
}

TEST_CASE("malformed rows report their line") {
  const std::string text =
      "timestamp_utc,system_id,customers_out\n"
      "2021-07-01T00:00:00Z,A,3\n"
      "2021-07-01T01:00:00Z,A,lots\n";
  try {
    parse_outage_table(table(text));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    CHECK(std::string(e.what()).find("inline.csv:3") != std::string::npos);
  }
  CHECK_THROWS_AS(table("a,b\n1\n"), Error);
  CHECK_THROWS_AS(parse_outage_table(table("timestamp_utc,system_id\n")), Error);
  CHECK_THROWS_AS(parse_outage_table(table("timestamp_utc,system_id,customers_out\nnot-a-time,A,1\n")), Error);
}

}  // TEST_SUITE
