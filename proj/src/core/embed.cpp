#include "pf/embed.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace pf {

namespace {

void check_embed_input(const LatentMatrix& p) {
  require(p.rank() == 2, ErrorKind::dimension, "embedding expects [M,N] points, got " + shape_string(p.shape()));
  require(p.dim(0) >= 3, ErrorKind::data, "embedding needs at least 3 points");
  require_finite(p, "embedding input");
}

// Conditional probabilities of row i at precision beta; returns the entropy (nats).
double row_probs(const std::vector<double>& d2, std::size_t M, std::size_t i, double beta, double* out) {
  double sum = 0;
  for (std::size_t j = 0; j < M; ++j) {
    out[j] = j == i ? 0.0 : std::exp(-d2[i * M + j] * beta);
    sum += out[j];
  }
  if (sum <= 0) sum = std::numeric_limits<double>::min();
  double h = 0;
  for (std::size_t j = 0; j < M; ++j) {
    if (j == i) continue;
    h += beta * d2[i * M + j] * out[j];
    out[j] /= sum;
  }
  return std::log(sum) + h / sum;
}

}  // namespace

EmbedMethod parse_embed_method(std::string_view name) {
  if (name == "pca") return EmbedMethod::pca;
  if (name == "tsne") return EmbedMethod::tsne;
  fail(ErrorKind::config, "unknown embedding method '" + std::string(name) + "'");
}

Tensor<double> pca_2d(const LatentMatrix& points, std::vector<double>* variance) {
  check_embed_input(points);
  const Eigen::Index M = static_cast<Eigen::Index>(points.dim(0)), N = static_cast<Eigen::Index>(points.dim(1));
  Eigen::MatrixXd X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(points.ptr(), M, N);
  X.rowwise() -= X.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(N, 2);
  const Eigen::Index r = std::min<Eigen::Index>(2, svd.matrixV().cols());
  V.leftCols(r) = svd.matrixV().leftCols(r);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    V.col(c).cwiseAbs().maxCoeff(&arg);
    if (V(arg, c) < 0) V.col(c) = -V.col(c);
  }
  if (variance) {
    variance->assign(2, 0.0);
    for (Eigen::Index c = 0; c < r; ++c) {
      const double s = svd.singularValues()(c);
      (*variance)[static_cast<std::size_t>(c)] = s * s / static_cast<double>(M - 1);
    }
  }
  const Eigen::MatrixXd Y = X * V;
  Tensor<double> out(Shape{points.dim(0), 2});
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index c = 0; c < 2; ++c) out[static_cast<std::size_t>(i * 2 + c)] = Y(i, c);
  return out;
}

Tensor<double> tsne_2d(const LatentMatrix& points, std::uint64_t seed, const TsneOptions& opt) {
  check_embed_input(points);
  const std::size_t M = points.dim(0), N = points.dim(1);
  require(M <= 5000, ErrorKind::config, "exact t-SNE is limited to 5000 points, got " + std::to_string(M));
  require(opt.perplexity > 0 && opt.perplexity < static_cast<double>(M) / 3.0, ErrorKind::config,
          "t-SNE perplexity " + std::to_string(opt.perplexity) + " must be below M/3 = " +
              std::to_string(static_cast<double>(M) / 3.0));
  require(opt.iterations >= 1 && opt.learning_rate > 0, ErrorKind::config, "t-SNE iterations and learning rate must be positive");

  std::vector<double> d2(M * M, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < N; ++c) {
        const double d = points[i * N + c] - points[j * N + c];
        s += d * d;
      }
      d2[i * M + j] = d2[j * M + i] = s;
    }

  // Per-row precision by bisection on the entropy.
  const double target = std::log(opt.perplexity);
  std::vector<double> P(M * M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
      const double h = row_probs(d2, M, i, beta, P.data() + i * M);
      if (std::abs(h - target) < 1e-5) break;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
  }
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = i + 1; j < M; ++j) {
      const double v = std::max((P[i * M + j] + P[j * M + i]) / (2.0 * static_cast<double>(M)), 1e-12);
      P[i * M + j] = P[j * M + i] = v;
    }

  std::mt19937_64 rng(seed);
  std::vector<double> Y(M * 2), vel(M * 2, 0.0), gains(M * 2, 1.0), grad(M * 2), num(M * M);
  for (std::size_t i = 0; i < M * 2; i += 2) {
    // Box-Muller on portable uniforms.
    const double u1 = std::max(unit_uniform(rng()), 1e-300), u2 = unit_uniform(rng());
    const double r = std::sqrt(-2.0 * std::log(u1)) * 1e-4;
    Y[i] = r * std::cos(2 * std::numbers::pi * u2);
    Y[i + 1] = r * std::sin(2 * std::numbers::pi * u2);
  }

  for (int it = 0; it < opt.iterations; ++it) {
    const double exag = it < opt.exaggeration_iters ? opt.exaggeration : 1.0;
    const double momentum = it < opt.exaggeration_iters ? 0.5 : 0.8;
    double qsum = 0;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = i + 1; j < M; ++j) {
        const double dx = Y[2 * i] - Y[2 * j], dy = Y[2 * i + 1] - Y[2 * j + 1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * M + j] = num[j * M + i] = q;
        qsum += 2 * q;
      }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) {
        if (i == j) continue;
        const double q = num[i * M + j];
        const double w = (exag * P[i * M + j] - q / qsum) * q;
        grad[2 * i] += 4 * w * (Y[2 * i] - Y[2 * j]);
        grad[2 * i + 1] += 4 * w * (Y[2 * i + 1] - Y[2 * j + 1]);
      }
    for (std::size_t k = 0; k < M * 2; ++k) {
      const bool same_sign = (grad[k] > 0) == (vel[k] > 0);
      gains[k] = std::max(0.01, same_sign ? gains[k] * 0.8 : gains[k] + 0.2);
      vel[k] = momentum * vel[k] - opt.learning_rate * gains[k] * grad[k];
      Y[k] += vel[k];
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < M; ++i) mx += Y[2 * i], my += Y[2 * i + 1];
    mx /= static_cast<double>(M);
    my /= static_cast<double>(M);
    for (std::size_t i = 0; i < M; ++i) Y[2 * i] -= mx, Y[2 * i + 1] -= my;
  }
  Tensor<double> out(Shape{M, 2}, std::move(Y));
  require_finite(out, "t-SNE embedding");
  return out;
}

Tensor<double> embed_2d(const LatentMatrix& points, EmbedMethod method, std::uint64_t seed, const TsneOptions& opt) {
  return method == EmbedMethod::pca ? pca_2d(points) : tsne_2d(points, seed, opt);
}

void write_svg_scatter(const std::filesystem::path& path, const Tensor<double>& coords, const std::vector<int>& group,
                       const std::vector<bool>& accepted, const std::vector<std::string>& group_names,
                       const std::string& title) {
  require(coords.rank() == 2 && coords.dim(1) == 2, ErrorKind::dimension, "scatter expects [M,2] coordinates");
  const std::size_t M = coords.dim(0);
  require(group.size() == M && accepted.size() == M, ErrorKind::dimension, "scatter: one group and status per point");
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  const double W = 640, H = 480, margin = 40, legend = 130;
  double x0 = coords[0], x1 = coords[0], y0 = coords[1], y1 = coords[1];
  for (std::size_t i = 0; i < M; ++i) {
    x0 = std::min(x0, coords[2 * i]), x1 = std::max(x1, coords[2 * i]);
    y0 = std::min(y0, coords[2 * i + 1]), y1 = std::max(y1, coords[2 * i + 1]);
  }
  const double sx = x1 > x0 ? (W - legend - 2 * margin) / (x1 - x0) : 1, sy = y1 > y0 ? (H - 2 * margin) / (y1 - y0) : 1;
  auto color = [&](int g) { return g < 0 ? std::string("#999999") : std::string(palette[g % 8]); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
    << H << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"" << margin << "\" y=\"24\" "
    << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t i = 0; i < M; ++i) {
    const double px = margin + (coords[2 * i] - x0) * sx, py = H - margin - (coords[2 * i + 1] - y0) * sy;
    const std::string c = color(group[i]);
    s << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" "
      << (accepted[i] ? "fill=\"" + c + "\"" : "fill=\"none\" stroke=\"" + c + "\"") << "/>\n";
  }
  for (std::size_t g = 0; g < group_names.size(); ++g) {
    const double ly = margin + 20.0 * static_cast<double>(g);
    s << "<circle cx=\"" << W - legend + 10 << "\" cy=\"" << ly << "\" r=\"4\" fill=\"" << color(static_cast<int>(g))
      << "\"/><text x=\"" << W - legend + 20 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << group_names[g] << "</text>\n";
  }
  s << "<text x=\"" << W - legend + 4 << "\" y=\"" << margin + 20.0 * static_cast<double>(group_names.size()) + 10
    << "\" font-family=\"sans-serif\" font-size=\"11\">hollow = rejected</text>\n</svg>\n";
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorKind::io, "cannot write " + path.string());
  f << s.str();
  require(static_cast<bool>(f), ErrorKind::io, "write failed: " + path.string());
}

}  // namespace pf
