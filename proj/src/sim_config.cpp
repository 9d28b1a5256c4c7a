#include "divemeta/sim_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace divemeta {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    items.emplace_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

[[noreturn]] void config_error(const Entry& e, std::string_view key, std::string_view what) {
  throw Error(ErrorCode::ConfigError, fmt::format("line {}: key '{}': {}", e.line, key, what));
}

template <typename T>
T parse_number(const Entry& e, std::string_view key, std::string_view text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    config_error(e, key, fmt::format("'{}' is not a valid number", text));
  }
  return v;
}

const std::vector<std::string_view> kKnownKeys = {"n_studies", "size_pattern", "avg_n",  "outcome", "i2",
                                                  "replicates", "seed",        "alpha", "methods"};

}  // namespace

SimConfig parse_sim_config_text(std::string_view text) {
  std::map<std::string, Entry, std::less<>> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      throw Error(ErrorCode::ConfigError, fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    if (entries.contains(key)) {
      throw Error(ErrorCode::ConfigError, fmt::format("line {}: key '{}' given twice", line_no, key));
    }
    entries.emplace(key, Entry{value, line_no});
  }

  auto require = [&](std::string_view key) -> const Entry& {
    const auto it = entries.find(key);
    if (it == entries.end()) throw Error(ErrorCode::ConfigError, fmt::format("missing required key '{}'", key));
    return it->second;
  };
  auto optional = [&](std::string_view key) -> const Entry* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  SimScenario base;
  {
    const Entry& e = require("n_studies");
    base.n_studies = parse_number<int>(e, "n_studies", e.value);
  }
  {
    const Entry& e = require("size_pattern");
    if (e.value == "fixed") base.size_pattern = SizePattern::Fixed;
    else if (e.value == "varying") base.size_pattern = SizePattern::Varying;
    else config_error(e, "size_pattern", fmt::format("'{}' is not fixed|varying", e.value));
  }
  {
    const Entry& e = require("avg_n");
    base.avg_n = parse_number<int>(e, "avg_n", e.value);
  }
  {
    const Entry& e = require("outcome");
    if (e.value == "normal") base.outcome = Outcome::Normal;
    else if (e.value == "skew-normal") base.outcome = Outcome::SkewNormal;
    else if (e.value == "lognormal") base.outcome = Outcome::LogNormal;
    else config_error(e, "outcome", fmt::format("'{}' is not normal|skew-normal|lognormal", e.value));
  }
  {
    const Entry& e = require("seed");
    base.seed = parse_number<std::uint64_t>(e, "seed", e.value);
  }
  if (const Entry* e = optional("replicates")) base.replicates = parse_number<int>(*e, "replicates", e->value);
  if (const Entry* e = optional("alpha")) base.alpha = parse_number<double>(*e, "alpha", e->value);

  SimConfig cfg;
  if (const Entry* e = optional("methods")) {
    cfg.methods = {false, false, false};
    for (const auto& m : split_list(e->value)) {
      if (m == "dive") cfg.methods.dive = true;
      else if (m == "qe-re") cfg.methods.qe_re = true;
      else if (m == "qe-fe") cfg.methods.qe_fe = true;
      else config_error(*e, "methods", fmt::format("unknown method '{}'", m));
    }
    if (!cfg.methods.dive && !cfg.methods.any_qe()) config_error(*e, "methods", "no method selected");
  }

  const Entry& i2_entry = require("i2");
  for (const auto& item : split_list(i2_entry.value)) {
    SimScenario s = base;
    s.i2 = parse_number<double>(i2_entry, "i2", item);
    try {
      validate_scenario(s);
    } catch (const Error& err) {
      throw Error(ErrorCode::ConfigError, fmt::format("invalid scenario: {}", err.what()));
    }
    cfg.scenarios.push_back(s);
  }
  return cfg;
}

SimConfig parse_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sim_config_text(buf.str());
}

}  // namespace divemeta
