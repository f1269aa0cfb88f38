#pragma once

// Line-delimited JSON metrics: one header record, then one record per episode.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "csqbm/agent.hpp"

namespace csqbm {

inline constexpr int kMetricsVersion = 1;

struct MetricsHeader {
  std::string env;
  std::uint64_t root_seed = 0;
  std::size_t episodes = 0;
};

std::string metrics_header_line(const MetricsHeader& header);
/// Fields: episode, steps, return, mean_abs_td, grad_norm, epsilon_or_beta, wall_ms.
std::string metrics_record_line(const EpisodeRecord& record);

/// Appends records to a file as they arrive; flushes each line.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const MetricsHeader& header);
  void write(const EpisodeRecord& record);

 private:
  std::filesystem::path path_;
  std::unique_ptr<std::ofstream> out_;
};

struct MetricsFile {
  MetricsHeader header;
  std::vector<EpisodeRecord> records;
};

/// Throws ConfigError naming the 1-based line of the first malformed record,
/// IoError when the file cannot be opened.
MetricsFile parse_metrics(std::istream& in, const std::string& source);
MetricsFile read_metrics(const std::filesystem::path& path);

}  // namespace csqbm
