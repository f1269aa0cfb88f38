#pragma once

// Learning-curve plots as standalone SVG.

#include <filesystem>
#include <string>
#include <vector>

#include "csqbm/agent.hpp"

namespace csqbm {

/// Two stacked panels: return per episode and mean |td| per episode.
/// Output depends only on `records`. Throws InvalidArgument when empty.
std::string render_learning_curve(const std::vector<EpisodeRecord>& records,
                                  const std::string& title);

/// Reads metrics, renders, then writes `svg_path`. Nothing is written when
/// reading or rendering fails.
void plot_metrics_file(const std::filesystem::path& metrics_path,
                       const std::filesystem::path& svg_path);

}  // namespace csqbm
