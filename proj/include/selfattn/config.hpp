#pragma once

#include "selfattn/model.hpp"
#include "selfattn/training.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace selfattn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Flat "key = value" configuration. '#' starts a comment. Unknown keys are
 * rejected on every path (file, override, programmatic set).
 */
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, const std::string& origin = "<config>");
  static RunConfig load(const std::filesystem::path& path);
  /// Snapshot of a model/training setup, as stored in checkpoints.
  static RunConfig from(const ModelConfig& model, const TrainConfig& train);

  static const std::vector<std::string>& known_keys();

  void set(const std::string& key, const std::string& value);
  /// "key=value" form used by --set.
  void apply_override(std::string_view assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  std::optional<std::string> path(const std::string& key) const;

  /// Validated model setup; d, u, d_a, r and classes are required.
  ModelConfig model_config() const;
  TrainConfig train_config() const;

  std::string to_text() const;

  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace selfattn
