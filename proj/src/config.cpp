#include "bars/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "bars/error.hpp"

namespace bars {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorCode::Schema, fmt::format("{}: expected {}, got '{}'", key, expected, value));
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

double fraction(std::string_view key, std::string_view v) {
  const double f = parse_double(key, v);
  if (!(f > 0.0 && f < 1.0)) bad_value(key, v, "a value in (0, 1)");
  return f;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"conf_floor",
       [](RunConfig& c, auto k, auto v) {
         c.pipeline.conf_floor = parse_double(k, v);
         if (c.pipeline.conf_floor < 0.0 || c.pipeline.conf_floor > 1.0) bad_value(k, v, "a value in [0, 1]");
       }},
      {"min_stabilization_points",
       [](RunConfig& c, auto k, auto v) { c.pipeline.min_stabilization_points = parse_int<std::size_t>(k, v); }},
      {"stabilize", [](RunConfig& c, auto k, auto v) { c.pipeline.stabilize = parse_bool(k, v); }},
      {"smoothing_window",
       [](RunConfig& c, auto k, auto v) {
         c.pipeline.smoothing_window = parse_int<int>(k, v);
         if (c.pipeline.smoothing_window < 1 || c.pipeline.smoothing_window % 2 == 0)
           bad_value(k, v, "an odd positive integer");
       }},
      {"top_fraction",
       [](RunConfig& c, auto k, auto v) {
         c.pipeline.top_fraction = parse_double(k, v);
         if (!(c.pipeline.top_fraction > 0.0 && c.pipeline.top_fraction <= 1.0)) bad_value(k, v, "a value in (0, 1]");
       }},
      {"snap_fraction",
       [](RunConfig& c, auto k, auto v) {
         c.pipeline.snap_fraction = parse_double(k, v);
         if (!(c.pipeline.snap_fraction > 0.0)) bad_value(k, v, "a positive number");
       }},
      {"forward_fraction", [](RunConfig& c, auto k, auto v) { c.pipeline.forward_fraction = fraction(k, v); }},
      {"backward_fraction", [](RunConfig& c, auto k, auto v) { c.pipeline.backward_fraction = fraction(k, v); }},
      {"grid_size",
       [](RunConfig& c, auto k, auto v) {
         c.model.grid_size = parse_int<int>(k, v);
         if (c.model.grid_size < 1) bad_value(k, v, "a positive integer");
       }},
      {"grid_ratio", [](RunConfig& c, auto k, auto v) { c.model.grid_ratio = fraction(k, v); }},
      {"folds",
       [](RunConfig& c, auto k, auto v) {
         c.model.folds = parse_int<int>(k, v);
         if (c.model.folds < 2) bad_value(k, v, "an integer >= 2");
       }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.model.seed = parse_int<std::uint64_t>(k, v); }},
      {"repeats",
       [](RunConfig& c, auto k, auto v) {
         c.repeats = parse_int<std::size_t>(k, v);
         if (c.repeats < 1) bad_value(k, v, "a positive integer");
       }},
  };
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorCode::Schema, fmt::format("unknown config key '{}'", key));
  it->second(config, key, trim(value));
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open config {}", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Schema, fmt::format("{}:{}: expected key = value", path.string(), line_no));
    try {
      apply_setting(base, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::Schema, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return base;
}

nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"conf_floor", c.pipeline.conf_floor},
      {"min_stabilization_points", c.pipeline.min_stabilization_points},
      {"stabilize", c.pipeline.stabilize},
      {"smoothing_window", c.pipeline.smoothing_window},
      {"top_fraction", c.pipeline.top_fraction},
      {"snap_fraction", c.pipeline.snap_fraction},
      {"forward_fraction", c.pipeline.forward_fraction},
      {"backward_fraction", c.pipeline.backward_fraction},
      {"grid_size", c.model.grid_size},
      {"grid_ratio", c.model.grid_ratio},
      {"folds", c.model.folds},
      {"seed", c.model.seed},
      {"repeats", c.repeats},
  };
}

std::string format_config(const RunConfig& config) {
  const auto j = config_to_json(config);
  std::string out;
  for (const auto& [key, value] : j.items()) {
    std::string v = value.is_number_float() ? fmt::format("{:.17g}", value.get<double>()) : value.dump();
    out += fmt::format("{} = {}\n", key, v);
  }
  return out;
}

}  // namespace bars
