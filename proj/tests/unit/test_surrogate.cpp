#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include <nlohmann/json.hpp>

#include "gridres/checkpoint.hpp"
#include "gridres/error.hpp"
#include "gridres/surrogate.hpp"
#include "oracles.hpp"

using namespace gridres;

namespace {

std::vector<std::string> names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

SurrogateConfig tiny(RngStream& rng) {
  SurrogateConfig c;
  c.gru_hidden = static_cast<int>(rng.uniform_int(2, 4));
  c.gru_layers = static_cast<int>(rng.uniform_int(1, 2));
  c.mlp_layers = static_cast<int>(rng.uniform_int(1, 3));
  c.mlp_hidden = static_cast<int>(rng.uniform_int(0, 4));
  c.input_dim = static_cast<int>(rng.uniform_int(1, 3));
  c.n_systems = static_cast<int>(rng.uniform_int(1, 3));
  c.mlp_dropout = 0.0;
  return c;
}

Sequence random_sequence(RngStream& rng, std::size_t steps, std::size_t dim) {
  Sequence s(steps, dim);
  for (double& v : s.values) v = rng.uniform();
  return s;
}

/// Initialized weights with uniform(-0.5, 0.5) biases.
SurrogateModel randomized(const SurrogateConfig& c, std::uint64_t seed) {
  auto m = SurrogateModel::initialize(c, names(c.n_systems), {}, seed);
  RngStream rng(seed, 99);
  for (const auto& b : m.layout().blocks) {
    if (b.cols == 1) {
      for (std::size_t i = 0; i < b.size(); ++i) m.parameters()[b.offset + i] = rng.uniform(-0.5, 0.5);
    }
  }
  return m;
}

std::vector<TrainingSample> random_batch(RngStream& rng, const SurrogateConfig& c, std::size_t n, std::size_t steps) {
  std::vector<TrainingSample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    batch.push_back({random_sequence(rng, steps, static_cast<std::size_t>(c.input_dim)),
                     static_cast<int>(rng.uniform_int(0, c.n_systems - 1)), rng.uniform()});
  }
  return batch;
}

double batch_loss(SurrogateModel m, std::span<const double> theta, std::span<const TrainingSample> batch) {
  std::copy(theta.begin(), theta.end(), m.parameters().begin());
  double s = 0;
  for (const auto& x : batch) s += std::abs(predict_normalized(m, x.sequence, x.system) - x.label);
  return s / static_cast<double>(batch.size());
}

double gradcheck(const SurrogateModel& m, const std::vector<TrainingSample>& batch) {
  const auto g = backward(m, batch);
  const std::vector<double> theta(m.parameters().begin(), m.parameters().end());
  return finite_diff_gradcheck([&](std::span<const double> t) { return batch_loss(m, t, batch); }, theta, g.grad, 1e-4);
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("presets") {
  const auto a = SurrogateConfig::case_a(18, 3);
  CHECK(a.gru_hidden == 128);
  CHECK(a.gru_layers == 1);
  CHECK(a.mlp_layers == 2);
  CHECK(a.learning_rate == 0.00623);
  CHECK(a.weight_decay == 0.00058);
  CHECK(a.epochs == 500);
  const auto b = SurrogateConfig::case_b(16, 8);
  CHECK(b.gru_hidden == 16);
  CHECK(b.gru_layers == 4);
  CHECK(b.mlp_layers == 3);
  CHECK(b.epochs == 200);
}

TEST_CASE("layout sizes") {
  SurrogateConfig c;
  c.gru_hidden = 3;
  c.gru_layers = 2;
  c.mlp_layers = 2;
  c.mlp_hidden = 5;
  c.input_dim = 4;
  c.n_systems = 2;
  const auto l = ParameterLayout::build(c);
  const std::size_t expected = 9 * 4 + 9 * 3 + 9 + 9 * 3 + 9 * 3 + 9 + 5 * 5 + 5 + 1 * 5 + 1;
  CHECK(l.total == expected);
  CHECK(l.gru_u(1).name == "gru[1].U");
  CHECK(l.mlp_w(2, 1).rows == 1);
  CHECK(l.mlp_w(2, 0).cols == 5);
}

TEST_CASE("zero weights keep the hidden state at zero") {
  SurrogateConfig c;
  c.gru_hidden = 4;
  c.gru_layers = 2;
  c.input_dim = 3;
  const SurrogateModel m(c, names(1), {});
  RngStream rng(1, 1);
  const auto h = gru_forward(m, random_sequence(rng, 5, 3));
  for (double v : h) CHECK(v == 0.0);
  CHECK(decode(m, h, 0) == 0.5);
}

TEST_CASE("forward pass matches the scalar oracle") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = tiny(rng);
    const auto m = randomized(c, static_cast<std::uint64_t>(trial));
    const auto seq = random_sequence(rng, static_cast<std::size_t>(rng.uniform_int(1, 6)),
                                     static_cast<std::size_t>(c.input_dim));
    const auto h = gru_forward(m, seq);
    const auto expected = oracle::gru(m, seq);
    REQUIRE(h.size() == expected.size());
    for (std::size_t i = 0; i < h.size(); ++i) REQUIRE(std::abs(h[i] - expected[i]) <= 1e-10);
    for (int s = 0; s < c.n_systems; ++s) {
      REQUIRE(std::abs(decode(m, h, s) - oracle::mlp(m, expected, s)) <= 1e-12);
    }
  }
}

TEST_CASE("the recurrence is stateful and system dependent") {
  SurrogateConfig c;
  c.gru_hidden = 4;
  c.input_dim = 2;
  c.n_systems = 2;
  const auto m = randomized(c, 3);
  RngStream rng(2, 2);
  const auto two = random_sequence(rng, 2, 2);
  Sequence one(1, 2);
  one.at(0, 0) = two.at(0, 0);
  one.at(0, 1) = two.at(0, 1);
  CHECK(gru_forward(m, one) != gru_forward(m, two));
  const auto h = gru_forward(m, two);
  CHECK(decode(m, h, 0) != decode(m, h, 1));
}

TEST_CASE("single-layer decoder is an affine map and a sigmoid") {
  SurrogateConfig c;
  c.gru_hidden = 3;
  c.mlp_layers = 1;
  c.n_systems = 2;
  c.input_dim = 1;
  SurrogateModel m(c, names(2), {});
  const auto& w = m.layout().mlp_w(1, 0);
  const auto& b = m.layout().mlp_b(1, 0);
  const double weights[] = {0.5, -1.0, 2.0, 0.25, -0.75};
  for (std::size_t i = 0; i < 5; ++i) m.parameters()[w.offset + i] = weights[i];
  m.parameters()[b.offset] = 0.1;
  const std::vector<double> e{0.2, 0.4, -0.6};
  const double z = 0.5 * 0.2 - 1.0 * 0.4 + 2.0 * -0.6 + 0.25 + 0.1;
  CHECK(std::abs(decode(m, e, 0) - 1.0 / (1.0 + std::exp(-z))) <= 1e-12);
  CHECK(std::abs(decode(m, e, 1) - 1.0 / (1.0 + std::exp(-(z - 0.25 - 0.75)))) <= 1e-12);
  CHECK_THROWS_AS(decode(m, std::vector<double>{1.0}, 0), Error);
}

TEST_CASE("mae examples") {
  CHECK(mae_loss(std::vector<double>{0.3, 0.4}, std::vector<double>{0.3, 0.4}) == 0.0);
  CHECK(mae_loss(std::vector<double>{0.5}, std::vector<double>{0.7}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(mae_loss(std::vector<double>{0, 1}, std::vector<double>{1, 0}) == 1.0);
  CHECK_THROWS_AS(mae_loss(std::vector<double>{0.5}, std::vector<double>{0.7, 0.1}), Error);
}

TEST_CASE("gradients match central differences on tiny models") {
  RngStream rng(1234, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = tiny(rng);
    const auto m = randomized(c, 500 + static_cast<std::uint64_t>(trial));
    REQUIRE(m.parameters().size() <= 500);
    auto batch = random_batch(rng, c, 5, static_cast<std::size_t>(rng.uniform_int(1, 4)));
    for (auto& s : batch) {
      const double p = predict_normalized(m, s.sequence, s.system);
      if (std::abs(p - s.label) < 1e-3) s.label = p > 0.5 ? 0.0 : 1.0;
    }
    INFO("trial " << trial);
    CHECK(gradcheck(m, batch) <= 1e-4);
  }
}

TEST_CASE("hidden four, three steps") {
  SurrogateConfig c;
  c.gru_hidden = 4;
  c.input_dim = 2;
  c.n_systems = 2;
  c.mlp_layers = 2;
  const auto m = randomized(c, 42);
  RngStream rng(4, 4);
  const auto batch = random_batch(rng, c, 4, 3);
  CHECK(gradcheck(m, batch) <= 1e-4);
}

TEST_CASE("all-zero model gradients agree with central differences") {
  SurrogateConfig c;
  c.gru_hidden = 3;
  c.input_dim = 2;
  c.mlp_layers = 2;
  const SurrogateModel m(c, names(1), {});
  RngStream rng(5, 5);
  auto batch = random_batch(rng, c, 3, 3);
  for (auto& s : batch) s.label = 0.9;
  CHECK(gradcheck(m, batch) <= 1e-4);
}

TEST_CASE("subgradient sign follows the label") {
  SurrogateConfig c;
  c.gru_hidden = 2;
  c.input_dim = 1;
  c.mlp_layers = 1;
  const auto m = randomized(c, 8);
  RngStream rng(1, 1);
  auto batch = random_batch(rng, c, 1, 2);
  const double p = predict_normalized(m, batch[0].sequence, 0);
  const auto bias = m.layout().mlp_b(1, 0).offset;
  batch[0].label = p + 1e-3;
  const double below = backward(m, batch).grad[bias];
  batch[0].label = p - 1e-3;
  const double above = backward(m, batch).grad[bias];
  CHECK(below < 0.0);
  CHECK(above > 0.0);
}

TEST_CASE("non-finite parameters name their block") {
  SurrogateConfig c;
  c.gru_hidden = 2;
  c.input_dim = 1;
  auto m = randomized(c, 8);
  m.parameters()[m.layout().gru_u(0).offset] = std::numeric_limits<double>::quiet_NaN();
  RngStream rng(1, 1);
  const auto batch = random_batch(rng, c, 2, 2);
  try {
    backward(m, batch);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numerical_failure);
    CHECK(std::string(e.what()).find("gru[0]") != std::string::npos);
  }
}

TEST_CASE("gradients are independent of the worker count") {
  RngStream rng(6, 6);
  SurrogateConfig c;
  c.gru_hidden = 5;
  c.gru_layers = 2;
  c.input_dim = 3;
  c.n_systems = 2;
  c.gru_dropout = 0.3;
  c.mlp_dropout = 0.3;
  const auto m = randomized(c, 6);
  const auto batch = random_batch(rng, c, 37, 4);
  const DropoutSpec drop{true, 77, 3};
  const auto one = backward(m, batch, drop, 1);
  const auto four = backward(m, batch, drop, 4);
  CHECK(one.grad == four.grad);
  CHECK(one.loss == four.loss);
  const auto plain = backward(m, batch, {}, 1);
  CHECK(plain.grad != one.grad);
  CHECK(backward(m, batch, drop, 2).predictions == one.predictions);
}

TEST_CASE("adam examples") {
  std::vector<double> theta{1.0, -2.0};
  const std::vector<double> g{0.3, -4.0};
  AdamState st;
  adam_step(theta, g, st, 0.01, 0.0, 1);
  CHECK(theta[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
  CHECK(theta[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-7));

  std::vector<double> still{0.5};
  AdamState s2;
  adam_step(still, std::vector<double>{0.0}, s2, 0.1, 0.0, 1);
  CHECK(still[0] == 0.5);

  std::vector<double> decay{1.0};
  AdamState s3;
  adam_step(decay, std::vector<double>{0.0}, s3, 0.1, 0.01, 1);
  CHECK(decay[0] == doctest::Approx(0.999).epsilon(1e-15));
}

TEST_CASE("adam matches a hand-rolled second step") {
  std::vector<double> theta{0.2};
  AdamState st;
  const double lr = 0.05;
  adam_step(theta, std::vector<double>{0.4}, st, lr, 0.0, 1);
  adam_step(theta, std::vector<double>{-0.1}, st, lr, 0.0, 2);
  const double m1 = 0.1 * 0.4, v1 = 0.001 * 0.16;
  const double t1 = 0.2 - lr * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
  const double m2 = 0.9 * m1 + 0.1 * -0.1, v2 = 0.999 * v1 + 0.001 * 0.01;
  const double t2 = t1 - lr * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(theta[0] == doctest::Approx(t2).epsilon(1e-14));
}

TEST_CASE("prediction") {
  SurrogateConfig c;
  c.gru_hidden = 4;
  c.input_dim = 2;
  c.n_systems = 2;
  FeatureScaler sc{{0.0, 10.0}, {1.0, 20.0}};
  auto m = SurrogateModel::initialize(c, {"a", "b"}, sc, 3);
  CHECK(m.system_index("b") == 1);
  CHECK_THROWS_AS(m.system_index("zz"), Error);

  RngStream rng(9, 9);
  std::vector<Sequence> raw;
  for (int i = 0; i < 5; ++i) {
    Sequence s(3, 2);
    for (std::size_t t = 0; t < 3; ++t) {
      s.at(t, 0) = rng.uniform();
      s.at(t, 1) = rng.uniform(10, 20);
    }
    raw.push_back(s);
  }
  raw[2].at(1, 1) = 35.0;
  PredictStats stats;
  const auto batch = predict_batch(m, raw, 1, &stats);
  CHECK(stats.clamped_values == 1);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double p = predict(m, raw[i], 1);
    CHECK(p == batch[i]);
    CHECK(p == predict(m, raw[i], 1));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("scaler") {
  Sequence a(2, 2), b(1, 2);
  a.values = {0, 5, 2, 5};
  b.values = {4, 5};
  const Sequence* seqs[] = {&a, &b};
  const auto s = FeatureScaler::fit(seqs);
  CHECK(s.min == std::vector<double>{0, 5});
  CHECK(s.max == std::vector<double>{4, 5});
  Sequence x(1, 2);
  x.values = {1, 5};
  CHECK(s.transform(x) == 0);
  CHECK(x.values == std::vector<double>{0.25, 0.0});
  x.values = {-4, 9};
  CHECK(s.transform(x) == 1);
  CHECK(x.values[0] == 0.0);
}

TEST_CASE("checkpoint round trip is bit identical") {
  SurrogateConfig c = SurrogateConfig::case_b(16, 3);
  c.gru_hidden = 6;
  c.gru_layers = 2;
  FeatureScaler sc;
  RngStream rng(2, 2);
  for (int i = 0; i < 16; ++i) {
    sc.min.push_back(rng.uniform(0, 5));
    sc.max.push_back(sc.min.back() + rng.uniform(1, 10));
  }
  const auto m = SurrogateModel::initialize(c, {"1", "2", "7"}, sc, 12);
  const auto path = (std::filesystem::temp_directory_path() / "gridres_ckpt_test.json").string();
  save_checkpoint(m, path);
  const auto back = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(back.config() == m.config());
  CHECK(back.systems() == m.systems());
  CHECK(back.scaler().min == m.scaler().min);
  CHECK(std::equal(back.parameters().begin(), back.parameters().end(), m.parameters().begin()));
  for (int t = 0; t < 10; ++t) {
    Sequence s(4, 16);
    for (double& v : s.values) v = rng.uniform(0, 12);
    for (int sys = 0; sys < 3; ++sys) {
      const double p = predict(m, s, sys), q = predict(back, s, sys);
      REQUIRE(std::memcmp(&p, &q, sizeof p) == 0);
    }
  }
}

TEST_CASE("base64 is exact") {
  const std::vector<double> v{0.0, -0.0, 1.0 / 3.0, 1e-310, std::numeric_limits<double>::max(), -7.25};
  const auto text = encode_doubles(v);
  CHECK(text.size() % 4 == 0);
  const auto back = decode_doubles(text);
  REQUIRE(back.size() == v.size());
  CHECK(std::memcmp(back.data(), v.data(), v.size() * sizeof(double)) == 0);
  CHECK(encode_doubles(std::vector<double>{1.0}) == "AAAAAAAA8D8=");
  CHECK_THROWS_AS(decode_doubles("abc"), Error);
}

TEST_CASE("checkpoint schema problems") {
  SurrogateConfig c;
  c.gru_hidden = 2;
  c.input_dim = 1;
  const auto m = SurrogateModel::initialize(c, {"a"}, {}, 1);
  auto doc = checkpoint_to_json(m);
  CHECK(doc.at("schema") == kCheckpointSchema);
  auto bad = doc;
  bad["schema"] = "gridres.surrogate/0";
  auto expect_schema = [](const nlohmann::json& d) {
    try {
      checkpoint_from_json(d);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::schema_mismatch);
    }
  };
  expect_schema(bad);
  bad = doc;
  bad["parameter_count"] = 3;
  expect_schema(bad);
  bad = doc;
  bad["extra"] = 1;
  expect_schema(bad);
}

}  // TEST_SUITE
