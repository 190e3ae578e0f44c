#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pf/cluster.hpp"

namespace pf {

enum class EmbedMethod { pca, tsne };
EmbedMethod parse_embed_method(std::string_view name);

/// Projection onto the top two principal axes. Each axis is signed so that its
/// largest-magnitude loading is positive. `variance`, when given, receives the two
/// leading eigenvalues of the sample covariance (denominator M - 1).
Tensor<double> pca_2d(const LatentMatrix& points, std::vector<double>* variance = nullptr);

struct TsneOptions {
  double perplexity = 30;
  int iterations = 1000;
  double learning_rate = 200;
  double exaggeration = 12;
  int exaggeration_iters = 250;
};

/// Exact t-SNE (no tree approximation). Requires perplexity < M / 3 and M <= 5000.
Tensor<double> tsne_2d(const LatentMatrix& points, std::uint64_t seed, const TsneOptions& opt = {});

Tensor<double> embed_2d(const LatentMatrix& points, EmbedMethod method, std::uint64_t seed,
                        const TsneOptions& opt = {});

/// Scatter plot: color by group (-1 = gray), hollow markers where `accepted` is false.
void write_svg_scatter(const std::filesystem::path& path, const Tensor<double>& coords, const std::vector<int>& group,
                       const std::vector<bool>& accepted, const std::vector<std::string>& group_names,
                       const std::string& title);

}  // namespace pf
