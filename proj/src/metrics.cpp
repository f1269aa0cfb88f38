#include "csqbm/metrics.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "csqbm/errors.hpp"

namespace csqbm {

using nlohmann::json;

std::string metrics_header_line(const MetricsHeader& header) {
  json j;
  j["format"] = "csqbm-metrics";
  j["version"] = kMetricsVersion;
  j["env"] = header.env;
  j["root_seed"] = header.root_seed;
  j["episodes"] = header.episodes;
  return j.dump();
}

std::string metrics_record_line(const EpisodeRecord& r) {
  // Ordered object so the field order is fixed in the file.
  nlohmann::ordered_json j;
  j["episode"] = r.episode;
  j["steps"] = r.steps;
  j["return"] = r.ret;
  j["mean_abs_td"] = r.mean_abs_td;
  j["grad_norm"] = r.grad_norm;
  j["epsilon_or_beta"] = r.epsilon_or_beta;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, const MetricsHeader& header)
    : path_(path), out_(std::make_unique<std::ofstream>(path, std::ios::binary)) {
  if (!*out_) throw IoError("cannot write metrics " + path.string());
  *out_ << metrics_header_line(header) << '\n';
  out_->flush();
}

void MetricsWriter::write(const EpisodeRecord& record) {
  *out_ << metrics_record_line(record) << '\n';
  out_->flush();
  if (!*out_) throw IoError("write failed on " + path_.string());
}

MetricsFile parse_metrics(std::istream& in, const std::string& source) {
  MetricsFile out;
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw ConfigError(at + "malformed metrics line (not JSON)");
    }
    try {
      if (!seen_header) {
        if (!j.is_object() || j.value("format", "") != "csqbm-metrics") {
          throw ConfigError(at + "first line must be a csqbm-metrics header");
        }
        if (j.at("version").get<int>() != kMetricsVersion) {
          throw ConfigError(at + "unsupported metrics version");
        }
        out.header.env = j.at("env").get<std::string>();
        out.header.root_seed = j.at("root_seed").get<std::uint64_t>();
        out.header.episodes = j.at("episodes").get<std::size_t>();
        seen_header = true;
        continue;
      }
      EpisodeRecord r;
      r.episode = j.at("episode").get<std::size_t>();
      r.steps = j.at("steps").get<std::size_t>();
      r.ret = j.at("return").get<double>();
      r.mean_abs_td = j.at("mean_abs_td").get<double>();
      r.grad_norm = j.at("grad_norm").get<double>();
      r.epsilon_or_beta = j.at("epsilon_or_beta").get<double>();
      r.wall_ms = j.at("wall_ms").get<double>();
      out.records.push_back(r);
    } catch (const json::exception& e) {
      throw ConfigError(at + "malformed metrics record: " + e.what());
    }
  }
  if (!seen_header) throw ConfigError(source + ": empty metrics file");
  return out;
}

MetricsFile read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read metrics " + path.string());
  return parse_metrics(in, path.string());
}

}  // namespace csqbm
