#include "casp/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "casp/errors.hpp"

namespace casp {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json policy_to_json(const TwoStagePolicy& pi) {
  json j;
  j["id"] = pi.id;
  j["stage1"] = pi.stage1;
  j["stage2"] = pi.stage2;
  return j;
}

TwoStagePolicy policy_from_json(const json& j) {
  TwoStagePolicy pi;
  pi.id = j.at("id").get<std::string>();
  pi.stage1 = j.at("stage1").get<std::vector<std::vector<double>>>();
  pi.stage2 = j.at("stage2").get<std::vector<std::vector<std::vector<double>>>>();
  return pi;
}

}  // namespace

std::string environment_to_text(const Environment& env) {
  json j;
  j["id"] = env.id;
  j["context_probs"] = env.context_probs;
  j["features"] = env.features;
  j["num_generators"] = env.num_generators;
  j["num_items"] = env.num_items;
  j["feasible"] = env.feasible;
  j["reward"] = env.reward;
  j["reward_bound"] = env.reward_bound;
  j["behavior"] = policy_to_json(env.behavior);
  j["proxy_scores"] = env.proxy_scores;
  return j.dump(2) + "\n";
}

Environment environment_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("environment text is not valid: ") + e.what());
  }
  Environment env;
  try {
    env.id = j.at("id").get<std::string>();
    env.context_probs = j.at("context_probs").get<std::vector<double>>();
    env.features = j.at("features").get<std::vector<std::vector<double>>>();
    env.num_generators = j.at("num_generators").get<int>();
    env.num_items = j.at("num_items").get<int>();
    env.feasible = j.at("feasible").get<FeasibleMap>();
    env.reward = j.at("reward").get<std::vector<std::vector<std::vector<double>>>>();
    env.reward_bound = j.at("reward_bound").get<double>();
    env.behavior = policy_from_json(j.at("behavior"));
    env.proxy_scores = j.at("proxy_scores").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("environment text is missing fields: ") + e.what());
  }
  return env;
}

void save_environment(const Environment& env, const std::string& path) {
  write_text_file(path, environment_to_text(env));
}

Environment load_environment(const std::string& path) {
  return environment_from_text(read_text_file(path));
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char ch : raw) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream body;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) body << ',';
    body << csv_field(header[i]);
  }
  body << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw ConfigError("CSV row width " + std::to_string(row.size()) +
                        " does not match header width " + std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) body << ',';
      body << csv_field(row[i]);
    }
    body << '\n';
  }
  write_text_file(path, body.str());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace casp
