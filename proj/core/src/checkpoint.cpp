#include "gridres/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/error.hpp"
#include "json_reader.hpp"

namespace gridres {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<unsigned char> to_bytes(std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return bytes;
}

}  // namespace

std::string encode_doubles(std::span<const double> values) {
  const auto bytes = to_bytes(values);
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t b0 = bytes[i];
    const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
    const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
    out.push_back(kAlphabet[(triple >> 18) & 63]);
    out.push_back(kAlphabet[(triple >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kAlphabet[(triple >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? kAlphabet[triple & 63] : '=');
  }
  return out;
}

std::vector<double> decode_doubles(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::schema_mismatch, "base64 length is not a multiple of 4");
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + static_cast<std::size_t>(j)];
      if (c == '=' && i + 4 == text.size() && j >= 2) {
        v[j] = 0;
        ++pad;
      } else {
        v[j] = decode_char(c);
        if (v[j] < 0 || pad > 0) throw Error(ErrorCode::schema_mismatch, "invalid base64 character");
      }
    }
    const std::uint32_t triple = (static_cast<std::uint32_t>(v[0]) << 18) | (static_cast<std::uint32_t>(v[1]) << 12) |
                                 (static_cast<std::uint32_t>(v[2]) << 6) | static_cast<std::uint32_t>(v[3]);
    bytes.push_back(static_cast<unsigned char>(triple >> 16));
    if (pad < 2) bytes.push_back(static_cast<unsigned char>(triple >> 8));
    if (pad < 1) bytes.push_back(static_cast<unsigned char>(triple));
  }
  if (bytes.size() % 8 != 0) throw Error(ErrorCode::schema_mismatch, "payload is not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json config_to_json(const SurrogateConfig& c) {
  return {{"gru_hidden", c.gru_hidden},       {"gru_layers", c.gru_layers},
          {"mlp_layers", c.mlp_layers},       {"mlp_hidden", c.mlp_hidden},
          {"gru_dropout", c.gru_dropout},     {"mlp_dropout", c.mlp_dropout},
          {"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},               {"batch_size", c.batch_size},
          {"input_dim", c.input_dim},         {"n_systems", c.n_systems}};
}

SurrogateConfig config_from_json(const json& doc, const std::string& path) {
  SurrogateConfig c;
  detail::JsonObjectReader r(doc, path);
  r.get("gru_hidden", c.gru_hidden);
  r.get("gru_layers", c.gru_layers);
  r.get("mlp_layers", c.mlp_layers);
  r.get("mlp_hidden", c.mlp_hidden);
  r.get("gru_dropout", c.gru_dropout);
  r.get("mlp_dropout", c.mlp_dropout);
  r.get("learning_rate", c.learning_rate);
  r.get("weight_decay", c.weight_decay);
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("input_dim", c.input_dim);
  r.get("n_systems", c.n_systems);
  r.finish();
  return c;
}

json checkpoint_to_json(const SurrogateModel& model) {
  json doc;
  doc["schema"] = kCheckpointSchema;
  doc["config"] = config_to_json(model.config());
  doc["systems"] = model.systems();
  doc["time_embedding"] = model.time_embedding();
  doc["scaler"] = {{"min", encode_doubles(model.scaler().min)}, {"max", encode_doubles(model.scaler().max)}};
  doc["parameter_count"] = model.parameters().size();
  doc["parameters"] = encode_doubles(model.parameters());
  return doc;
}

SurrogateModel checkpoint_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != kCheckpointSchema) {
    throw Error(ErrorCode::schema_mismatch, fmt::format("checkpoint schema must be '{}'", kCheckpointSchema));
  }
  detail::JsonObjectReader r(doc, "checkpoint", ErrorCode::schema_mismatch);
  std::string schema, params_text;
  SurrogateConfig config;
  std::vector<std::string> systems;
  bool time_embedding = false;
  FeatureScaler scaler;
  std::size_t count = 0;
  r.require("schema", schema);
  const json* cfg = r.raw("config");
  if (!cfg) r.fail("checkpoint.config", "missing");
  try {
    config = config_from_json(*cfg, "checkpoint.config");
  } catch (const Error& e) {
    throw Error(ErrorCode::schema_mismatch, e.what());
  }
  r.require("systems", systems);
  r.get("time_embedding", time_embedding);
  r.object("scaler", [&](detail::JsonObjectReader& s) {
    std::string lo, hi;
    s.require("min", lo);
    s.require("max", hi);
    scaler.min = decode_doubles(lo);
    scaler.max = decode_doubles(hi);
  });
  if (scaler.min.size() != scaler.max.size()) r.fail("checkpoint.scaler", "min and max differ in length");
  r.require("parameter_count", count);
  r.require("parameters", params_text);
  r.finish();

  SurrogateModel model(config, std::move(systems), std::move(scaler), time_embedding);
  const auto params = decode_doubles(params_text);
  if (params.size() != count || params.size() != model.parameters().size()) {
    throw Error(ErrorCode::schema_mismatch,
                fmt::format("checkpoint holds {} parameters; the configured model needs {}", params.size(),
                            model.parameters().size()));
  }
  std::copy(params.begin(), params.end(), model.parameters().begin());
  return model;
}

void save_checkpoint(const SurrogateModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", path));
  out << checkpoint_to_json(model).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::io_error, fmt::format("failed writing '{}'", path));
}

SurrogateModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot read '{}'", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("{}: {}", path, e.what()));
  }
  return checkpoint_from_json(doc);
}

}  // namespace gridres
