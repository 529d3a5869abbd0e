#pragma once

#include <set>
#include <string>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "gridres/error.hpp"

namespace gridres::detail {

/// Field-by-field reader of a JSON object that reports failures with their
/// dotted path and rejects keys nobody asked for.
class JsonObjectReader {
 public:
  JsonObjectReader(const nlohmann::json& doc, std::string path, ErrorCode code = ErrorCode::config_error)
      : doc_(doc), path_(std::move(path)), code_(code) {
    if (!doc_.is_object()) fail(path_, "expected an object");
  }

  const std::string& path() const noexcept { return path_; }
  bool has(const char* key) const { return doc_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(field(key), "wrong type");
    }
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!has(key)) fail(field(key), "missing");
    get(key, out);
  }

  template <typename F>
  void object(const char* key, F&& read) {
    seen_.insert(key);
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    JsonObjectReader child(*it, field(key), code_);
    read(child);
    child.finish();
  }

  const nlohmann::json* raw(const char* key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!seen_.count(it.key())) fail(field(it.key().c_str()), "unknown key");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw Error(code_, fmt::format("{}: {}", where, what));
  }

 private:
  const nlohmann::json& doc_;
  std::string path_;
  ErrorCode code_;
  std::set<std::string> seen_;
};

}  // namespace gridres::detail
