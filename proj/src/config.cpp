#include "selfattn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace selfattn {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys{
      // model
      "vocab_size", "d", "u", "d_a", "r", "head", "b", "p", "q", "k", "classes", "train_embeddings",
      "flatten_order",
      // data
      "min_count", "lowercase", "embeddings",
      // training
      "optimizer", "lr", "batch_size", "penalty_coeff", "dropout", "l2", "clip", "max_epochs", "patience", "seed",
      // paths
      "train_path", "dev_path", "checkpoint_path", "history_path"};
  return keys;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      config.set(trim(std::string_view(content).substr(0, eq)), trim(std::string_view(content).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

RunConfig RunConfig::from(const ModelConfig& m, const TrainConfig& t) {
  RunConfig c;
  c.set("vocab_size", std::to_string(m.vocab_size));
  c.set("d", std::to_string(m.embedding_dim));
  c.set("u", std::to_string(m.lstm_units));
  c.set("d_a", std::to_string(m.attention_units));
  c.set("r", std::to_string(m.hops));
  c.set("head", to_string(m.head));
  c.set("b", std::to_string(m.mlp_units));
  c.set("p", std::to_string(m.row_group_units));
  c.set("q", std::to_string(m.column_group_units));
  c.set("k", std::to_string(m.factor_units));
  c.set("classes", std::to_string(m.classes));
  c.set("train_embeddings", m.train_embeddings ? "true" : "false");
  c.set("flatten_order", "row-major");
  c.set("optimizer", to_string(t.optimizer));
  c.set("lr", format_double(t.learning_rate));
  c.set("batch_size", std::to_string(t.batch_size));
  c.set("penalty_coeff", format_double(t.penalty_coeff));
  c.set("dropout", format_double(t.dropout));
  c.set("l2", format_double(t.l2));
  c.set("clip", t.clip ? format_double(*t.clip) : "none");
  c.set("max_epochs", std::to_string(t.max_epochs));
  c.set("patience", std::to_string(t.patience));
  c.set("seed", std::to_string(t.seed));
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown config key '" + key + "'");
  if (key == "flatten_order" && value != "row-major") {
    throw ConfigError("flatten_order must be row-major, got '" + value + "'");
  }
  values_[key] = value;
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, std::string fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? std::move(fallback) : it->second;
}

std::optional<std::string> RunConfig::path(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const auto text = get(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const auto text = get(key);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto text = get(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + text + "'");
}

ModelConfig RunConfig::model_config() const {
  for (const char* key : {"d", "u", "d_a", "r", "classes"}) get(key);
  ModelConfig m;
  m.vocab_size = get_int("vocab_size", 0);
  m.embedding_dim = get_int("d", m.embedding_dim);
  m.lstm_units = get_int("u", m.lstm_units);
  m.attention_units = get_int("d_a", m.attention_units);
  m.hops = get_int("r", m.hops);
  m.mlp_units = get_int("b", m.mlp_units);
  m.row_group_units = get_int("p", m.row_group_units);
  m.column_group_units = get_int("q", m.column_group_units);
  m.factor_units = get_int("k", m.factor_units);
  m.classes = get_int("classes", m.classes);
  m.train_embeddings = get_bool("train_embeddings", m.train_embeddings);
  try {
    m.head = parse_head_kind(get_or("head", "dense"));
    m.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  if (get_or("head", "dense") == "gated-pair") {
    t.optimizer = Optimizer::adagrad;
    t.learning_rate = 0.01;
    t.penalty_coeff = 0.3;
    t.dropout = 0;
    t.l2 = 0;
    t.clip.reset();
  }
  try {
    if (has("optimizer")) t.optimizer = parse_optimizer(get("optimizer"));
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  t.learning_rate = get_double("lr", t.learning_rate);
  t.batch_size = static_cast<std::size_t>(get_int("batch_size", static_cast<long long>(t.batch_size)));
  t.penalty_coeff = get_double("penalty_coeff", t.penalty_coeff);
  t.dropout = get_double("dropout", t.dropout);
  t.l2 = get_double("l2", t.l2);
  if (has("clip")) {
    const auto text = get("clip");
    if (text == "none") {
      t.clip.reset();
    } else {
      t.clip = get_double("clip", 0);
    }
  }
  t.max_epochs = static_cast<int>(get_int("max_epochs", t.max_epochs));
  t.patience = static_cast<int>(get_int("patience", t.patience));
  t.seed = static_cast<std::uint64_t>(get_int("seed", static_cast<long long>(t.seed)));
  try {
    t.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  return t;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& key : known_keys()) {
    if (const auto it = values_.find(key); it != values_.end()) out += key + " = " + it->second + "\n";
  }
  return out;
}

}  // namespace selfattn
