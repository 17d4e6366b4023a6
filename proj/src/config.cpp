#include "prmkit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <toml.hpp>

#include "prmkit/error.hpp"

namespace prmkit {

namespace {

using Setter = std::function<void(const toml::node&, const std::string&)>;

std::string where(const toml::node& node, const std::string& key) {
  const auto& src = node.source();
  return "config key '" + key + "' (line " + std::to_string(src.begin.line) + ")";
}

Setter as_string(std::string& out) {
  return [&out](const toml::node& n, const std::string& key) {
    auto v = n.value_exact<std::string>();
    if (!v) throw ValidationError(where(n, key) + " must be a string");
    out = *v;
  };
}

Setter as_int(int& out) {
  return [&out](const toml::node& n, const std::string& key) {
    auto v = n.value_exact<std::int64_t>();
    if (!v) throw ValidationError(where(n, key) + " must be an integer");
    if (*v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
      throw ValidationError(where(n, key) + " is out of range");
    }
    out = static_cast<int>(*v);
  };
}

Setter as_u64(std::uint64_t& out) {
  return [&out](const toml::node& n, const std::string& key) {
    auto v = n.value_exact<std::int64_t>();
    if (!v || *v < 0) throw ValidationError(where(n, key) + " must be a non-negative integer");
    out = static_cast<std::uint64_t>(*v);
  };
}

Setter as_double(double& out) {
  return [&out](const toml::node& n, const std::string& key) {
    if (auto v = n.value_exact<double>()) {
      out = *v;
    } else if (auto i = n.value_exact<std::int64_t>()) {
      out = static_cast<double>(*i);
    } else {
      throw ValidationError(where(n, key) + " must be a number");
    }
  };
}

}  // namespace

ToolkitConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw ValidationError(msg.str());
  }

  ToolkitConfig cfg;
  std::string strategy(to_string(cfg.segmentation.strategy));
  std::string reflection_file;

  const std::map<std::string, std::map<std::string, Setter>> schema = {
      {"segmentation",
       {{"strategy", as_string(strategy)},
        {"reflection_words_file", as_string(reflection_file)},
        {"min_step_tokens", as_int(cfg.segmentation.min_step_tokens)},
        {"max_steps", as_int(cfg.segmentation.max_steps)},
        {"max_step_tokens", as_int(cfg.segmentation.max_step_tokens)},
        {"retries", as_int(cfg.segmentation.retries)}}},
      {"backend",
       {{"endpoint", as_string(cfg.backend.endpoint)},
        {"model", as_string(cfg.backend.model)},
        {"timeout_s", as_double(cfg.backend.timeout_s)},
        {"max_in_flight", as_int(cfg.backend.max_in_flight)},
        {"max_retries", as_int(cfg.backend.max_retries)},
        {"backoff_initial_s", as_double(cfg.backend.backoff_initial_s)},
        {"backoff_max_s", as_double(cfg.backend.backoff_max_s)},
        {"audit_log", as_string(cfg.backend.audit_log)}}},
      {"annotation",
       {{"retries", as_int(cfg.annotation.retries)},
        {"temperature", as_double(cfg.annotation.temperature)},
        {"max_tokens", as_int(cfg.annotation.max_tokens)},
        {"max_parallel", as_int(cfg.annotation_parallel)}}},
      {"mc",
       {{"k", as_int(cfg.mc.k)},
        {"temperature", as_double(cfg.mc.temperature)},
        {"max_completion_tokens", as_int(cfg.mc.max_completion_tokens)},
        {"rollout_retries", as_int(cfg.mc.rollout_retries)},
        {"max_parallel", as_int(cfg.mc.max_parallel)},
        {"seed", as_u64(cfg.mc.seed)}}},
      {"train",
       {{"learning_rate", as_double(cfg.train.learning_rate)},
        {"epochs", as_int(cfg.train.epochs)},
        {"batch_size", as_int(cfg.train.batch_size)},
        {"l2", as_double(cfg.train.l2)},
        {"seed", as_u64(cfg.train.seed)}}},
      {"sim",
       {{"p_err", as_double(cfg.sim.p_err)},
        {"p_fix", as_double(cfg.sim.p_fix)},
        {"strength", as_double(cfg.sim.strength)},
        {"min_ops", as_int(cfg.sim.min_ops)},
        {"max_ops", as_int(cfg.sim.max_ops)},
        {"seed", as_u64(cfg.sim.seed)}}},
      {"review",
       {{"host", as_string(cfg.review.host)},
        {"port", as_int(cfg.review.port)},
        {"dataset", as_string(cfg.review.dataset)},
        {"journal", as_string(cfg.review.journal)}}},
  };

  for (const auto& [section, node] : root) {
    const std::string name(section.str());
    auto sit = schema.find(name);
    if (sit == schema.end()) throw ValidationError("unknown config section [" + name + "]");
    const auto* table = node.as_table();
    if (!table) throw ValidationError("config entry '" + name + "' must be a table");
    for (const auto& [key, value] : *table) {
      const std::string k(key.str());
      auto kit = sit->second.find(k);
      if (kit == sit->second.end()) throw ValidationError("unknown config key '" + name + "." + k + "'");
      kit->second(value, name + "." + k);
    }
  }

  cfg.segmentation.strategy = parse_segmentation_strategy(strategy);
  if (!reflection_file.empty()) {
    std::filesystem::path p(reflection_file);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.segmentation.reflection_words = load_reflection_words(p);
  }
  if (cfg.annotation.retries < 0) throw ValidationError("annotation.retries must be >= 0");
  if (cfg.annotation.max_tokens < 1) throw ValidationError("annotation.max_tokens must be >= 1");
  if (cfg.annotation_parallel < 1) throw ValidationError("annotation.max_parallel must be >= 1");
  if (cfg.backend.max_in_flight < 1) throw ValidationError("backend.max_in_flight must be >= 1");
  if (cfg.backend.max_retries < 0) throw ValidationError("backend.max_retries must be >= 0");
  if (cfg.backend.timeout_s <= 0) throw ValidationError("backend.timeout_s must be > 0");
  if (cfg.review.port < 0 || cfg.review.port > 65535) throw ValidationError("review.port must be in [0, 65535]");
  for (std::string* path : {&cfg.review.dataset, &cfg.review.journal, &cfg.backend.audit_log}) {
    if (!path->empty() && std::filesystem::path(*path).is_relative() && !base_dir.empty()) {
      *path = (base_dir / *path).string();
    }
  }
  cfg.segmentation.validate();
  cfg.mc.validate();
  cfg.train.validate();
  cfg.sim.validate();
  if (const char* key = std::getenv(kApiKeyEnv)) cfg.backend.api_key = key;
  return cfg;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace prmkit
