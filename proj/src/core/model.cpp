#include "pf/model.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "pf/checkpoint.hpp"
#include "pf/cluster.hpp"
#include "pf/preprocess.hpp"

namespace pf {

namespace {

constexpr std::size_t kEncodeChunk = 64;

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::deconv: return "deconv";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

LayerKind parse_kind(const std::string& s) {
  if (s == "conv") return LayerKind::conv;
  if (s == "deconv") return LayerKind::deconv;
  if (s == "dense") return LayerKind::dense;
  fail(ErrorKind::config, "unknown layer kind '" + s + "'");
}

nlohmann::json layer_json(const LayerSpec& l) {
  return {{"name", l.name},     {"kind", kind_name(l.kind)}, {"kernel", l.kernel},
          {"units", l.units},   {"stride", l.stride},        {"activation", to_string(l.activation)}};
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec l;
  l.name = j.at("name").get<std::string>();
  l.kind = parse_kind(j.at("kind").get<std::string>());
  l.kernel = j.at("kernel").get<int>();
  l.units = j.at("units").get<int>();
  l.stride = j.at("stride").get<int>();
  l.activation = parse_activation(j.at("activation").get<std::string>());
  return l;
}

LayerSpec conv(std::string name, int k, int f, int s) { return {LayerKind::conv, k, f, s, Activation::relu, name}; }
LayerSpec deconv(std::string name, int k, int f, int s, Activation a = Activation::relu) {
  return {LayerKind::deconv, k, f, s, a, name};
}
LayerSpec dense(std::string name, int units, Activation a) { return {LayerKind::dense, 0, units, 1, a, name}; }

std::size_t as_size(int v) { return static_cast<std::size_t>(v); }

// Feature-map shape [C,H,W] after the encoder's conv stack.
Shape encoder_map_shape(const ArchitectureSpec& spec) {
  Shape s{as_size(spec.input_channels), as_size(spec.input_size), as_size(spec.input_size)};
  for (const auto& l : spec.encoder) {
    if (l.kind != LayerKind::conv) break;
    const ConvGeometry g = layer_geometry(l, s[1]);
    const Shape out = conv2d_shape({1, s[0], s[1], s[2]}, {as_size(l.units), s[0], as_size(l.kernel), as_size(l.kernel)}, g);
    s = {out[1], out[2], out[3]};
  }
  return s;
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& data, const std::vector<std::size_t>& order, std::size_t begin,
                      std::size_t end) {
  Shape shape = data.shape();
  const std::size_t per = data.size() / shape[0];
  shape[0] = end - begin;
  std::vector<T> out(shape_size(shape));
  for (std::size_t i = begin; i < end; ++i)
    std::copy_n(data.ptr() + order[i] * per, per, out.data() + (i - begin) * per);
  return Tensor<T>(std::move(shape), std::move(out));
}

// Runs fn on consecutive row chunks of `batch` and stacks the [b,N] results.
template <class T, class Fn>
Tensor<T> chunked_rows(const Tensor<T>& batch, std::size_t width, Fn fn) {
  const std::size_t M = batch.dim(0);
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::vector<T> out;
  out.reserve(M * width);
  for (std::size_t s = 0; s < M; s += kEncodeChunk) {
    const Tensor<T> rows = fn(gather_rows(batch, order, s, std::min(M, s + kEncodeChunk)));
    out.insert(out.end(), rows.data().begin(), rows.data().end());
  }
  return Tensor<T>(Shape{M, width}, std::move(out));
}

}  // namespace

Variant parse_variant(std::string_view name) {
  if (name == "a") return Variant::a;
  if (name == "b") return Variant::b;
  if (name == "plain") return Variant::plain;
  if (name == "aytekin") return Variant::aytekin;
  fail(ErrorKind::config, "unknown model variant '" + std::string(name) + "'");
}

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::a: return "a";
    case Variant::b: return "b";
    case Variant::plain: return "plain";
    case Variant::aytekin: return "aytekin";
  }
  return "?";
}

int ArchitectureSpec::latent_length() const {
  require(!encoder.empty() && encoder.back().kind == LayerKind::dense, ErrorKind::config,
          "encoder must end with a dense latent layer");
  return encoder.back().units;
}

nlohmann::json ArchitectureSpec::to_json() const {
  nlohmann::json enc = nlohmann::json::array(), dec = nlohmann::json::array();
  for (const auto& l : encoder) enc.push_back(layer_json(l));
  for (const auto& l : decoder) dec.push_back(layer_json(l));
  return {{"input_size", input_size}, {"input_channels", input_channels}, {"encoder", enc}, {"decoder", dec}};
}

ArchitectureSpec ArchitectureSpec::from_json(const nlohmann::json& j) {
  ArchitectureSpec s;
  try {
    s.input_size = j.at("input_size").get<int>();
    s.input_channels = j.at("input_channels").get<int>();
    for (const auto& l : j.at("encoder")) s.encoder.push_back(layer_from_json(l));
    for (const auto& l : j.at("decoder")) s.decoder.push_back(layer_from_json(l));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("malformed architecture: ") + e.what());
  }
  return s;
}

ArchitectureSpec ccae_architecture(int input_size, int latent_length) {
  require(latent_length >= 2, ErrorKind::config, "latent length must be >= 2");
  ArchitectureSpec s;
  s.input_size = input_size;
  s.encoder = {conv("conv1", 30, 16, 2), conv("conv2", 15, 32, 2), conv("conv3", 9, 64, 2),
               conv("conv4", 3, 128, 2), dense("latent", latent_length, Activation::identity)};
  s.decoder = {dense("project", 0, Activation::relu), deconv("deconv1", 3, 64, 2), deconv("deconv2", 9, 32, 2),
               deconv("deconv3", 15, 16, 2), deconv("deconv4", 30, 1, 2, Activation::sigmoid)};
  trace_shapes(s);
  return s;
}

ArchitectureSpec aytekin_architecture(int input_size) {
  ArchitectureSpec s;
  s.input_size = input_size;
  s.encoder = {conv("conv1", 5, 32, 2), conv("conv2", 5, 64, 2), conv("conv3", 3, 128, 2),
               dense("latent", 2048, Activation::identity)};
  s.decoder = {dense("project", 0, Activation::relu), deconv("deconv1", 3, 128, 2), deconv("deconv2", 5, 64, 2),
               deconv("deconv3", 5, 32, 2), deconv("deconv4", 3, 1, 1, Activation::sigmoid)};
  trace_shapes(s);
  return s;
}

ConvGeometry layer_geometry(const LayerSpec& layer, std::size_t in_extent) {
  const std::size_t k = as_size(layer.kernel), s = as_size(layer.stride);
  ConvGeometry g;
  g.stride = s;
  if (layer.kind == LayerKind::conv) {
    g.pad = same_padding(in_extent, in_extent, k, k, s);
  } else {
    const std::size_t out = in_extent * s;
    g.pad = same_padding(out, out, k, k, s);
    const std::size_t natural = conv_transpose_out_size(in_extent, k, s, g.pad.top, g.pad.bottom, 0);
    g.output_padding = out - natural;
  }
  return g;
}

std::vector<TraceRow> trace_shapes(const ArchitectureSpec& spec) {
  require(spec.input_size >= 1 && spec.input_channels >= 1, ErrorKind::config, "input shape must be positive");
  require(spec.encoder.size() >= 2 && spec.decoder.size() >= 2, ErrorKind::config,
          "encoder and decoder need at least two layers each");
  for (const auto& l : spec.encoder)
    require(l.units >= 1 && l.stride >= 1 && (l.kind == LayerKind::dense || l.kernel >= 1), ErrorKind::config,
            "layer " + l.name + ": units, kernel and stride must be positive");
  for (std::size_t i = 0; i + 1 < spec.encoder.size(); ++i)
    require(spec.encoder[i].kind == LayerKind::conv, ErrorKind::config,
            "encoder layer " + spec.encoder[i].name + " must be conv");
  require(spec.encoder.back().kind == LayerKind::dense, ErrorKind::config, "encoder must end with a dense layer");
  require(spec.decoder.front().kind == LayerKind::dense, ErrorKind::config, "decoder must start with a dense layer");
  for (std::size_t i = 1; i < spec.decoder.size(); ++i)
    require(spec.decoder[i].kind == LayerKind::deconv && spec.decoder[i].units >= 1 && spec.decoder[i].kernel >= 1 &&
                spec.decoder[i].stride >= 1,
            ErrorKind::config, "decoder layer " + spec.decoder[i].name + " must be a valid deconv");

  std::vector<TraceRow> rows;
  Shape s{as_size(spec.input_channels), as_size(spec.input_size), as_size(spec.input_size)};
  for (const auto& l : spec.encoder) {
    if (l.kind == LayerKind::conv) {
      const Shape out = conv2d_shape({1, s[0], s[1], s[2]}, {as_size(l.units), s[0], as_size(l.kernel), as_size(l.kernel)},
                                     layer_geometry(l, s[1]));
      s = {out[1], out[2], out[3]};
      rows.push_back({l.name, s});
    } else {
      rows.push_back({l.name, {as_size(l.units)}});
    }
  }
  const Shape map = encoder_map_shape(spec);
  rows.push_back({spec.decoder.front().name, map});
  s = map;
  for (std::size_t i = 1; i < spec.decoder.size(); ++i) {
    const auto& l = spec.decoder[i];
    const Shape out = conv2d_transpose_shape({1, s[0], s[1], s[2]}, {s[0], as_size(l.units), as_size(l.kernel), as_size(l.kernel)},
                                             layer_geometry(l, s[1]));
    s = {out[1], out[2], out[3]};
    rows.push_back({l.name, s});
  }
  const Shape input{as_size(spec.input_channels), as_size(spec.input_size), as_size(spec.input_size)};
  require(s == input, ErrorKind::config,
          "decoder output " + shape_string(s) + " does not match input " + shape_string(input));
  return rows;
}

std::size_t parameter_count(const ArchitectureSpec& spec) {
  std::size_t n = 0;
  std::size_t channels = as_size(spec.input_channels);
  const Shape map = encoder_map_shape(spec);
  const std::size_t flat = shape_size(map);
  for (const auto& l : spec.encoder) {
    if (l.kind == LayerKind::conv) {
      n += as_size(l.units) * channels * as_size(l.kernel * l.kernel) + as_size(l.units);
      channels = as_size(l.units);
    } else {
      n += flat * as_size(l.units) + as_size(l.units);
    }
  }
  n += as_size(spec.latent_length()) * flat + flat;
  channels = map[0];
  for (std::size_t i = 1; i < spec.decoder.size(); ++i) {
    const auto& l = spec.decoder[i];
    n += channels * as_size(l.units) * as_size(l.kernel * l.kernel) + as_size(l.units);
    channels = as_size(l.units);
  }
  return n;
}

template <class T>
std::vector<Parameter<T>*> Model<T>::parameter_list() {
  std::vector<Parameter<T>*> out;
  for (auto& p : params) out.push_back(&p);
  return out;
}

template <class T>
Model<T> build_model(Variant variant, const ArchitectureSpec& arch, std::uint64_t seed) {
  trace_shapes(arch);
  Model<T> m;
  m.variant = variant;
  m.arch = arch;
  m.seed = seed;
  m.norm = variant == Variant::aytekin ? RowNorm::unit_ball : RowNorm::mean_square;

  std::mt19937_64 rng(seed);
  // He-uniform: U(-b, b) with b = sqrt(6 / fan_in), variance-preserving through relu.
  auto make = [&](const std::string& id, Shape shape, double fan_in) {
    Tensor<T> w(std::move(shape));
    const double b = std::sqrt(6.0 / fan_in);
    for (auto& v : w.data()) v = static_cast<T>(b * (2.0 * unit_uniform(rng()) - 1.0));
    m.params.emplace_back(id + ".weight", std::move(w));
  };
  auto bias = [&](const std::string& id, std::size_t n) { m.params.emplace_back(id + ".bias", Tensor<T>(Shape{n})); };

  std::size_t channels = as_size(arch.input_channels);
  const Shape map = encoder_map_shape(arch);
  const std::size_t flat = shape_size(map);
  for (const auto& l : arch.encoder) {
    const std::size_t u = as_size(l.units);
    if (l.kind == LayerKind::conv) {
      const std::size_t k = as_size(l.kernel);
      make(l.name, {u, channels, k, k}, static_cast<double>(channels * k * k));
      channels = u;
    } else {
      make(l.name, {flat, u}, static_cast<double>(flat));
    }
    bias(l.name, u);
  }
  const auto& proj = arch.decoder.front();
  make(proj.name, {as_size(arch.latent_length()), flat}, arch.latent_length());
  bias(proj.name, flat);
  channels = map[0];
  for (std::size_t i = 1; i < arch.decoder.size(); ++i) {
    const auto& l = arch.decoder[i];
    const std::size_t k = as_size(l.kernel), u = as_size(l.units);
    // A stride-s deconv output pixel sees about k^2/s^2 taps per input channel.
    const double s = l.stride;
    make(l.name, {channels, u, k, k}, static_cast<double>(channels * k * k) / (s * s));
    bias(l.name, u);
    channels = u;
  }
  return m;
}

template <class T>
Model<T> build_ccae(Variant variant, int latent_length, std::uint64_t seed, int input_size) {
  require(variant != Variant::aytekin, ErrorKind::config, "use build_aytekin for the aytekin model");
  return build_model<T>(variant, ccae_architecture(input_size, latent_length), seed);
}

template <class T>
Model<T> build_aytekin(std::uint64_t seed, int input_size) {
  return build_model<T>(Variant::aytekin, aytekin_architecture(input_size), seed);
}

template <class T>
ForwardVars forward(Graph<T>& g, Model<T>& m, const Tensor<T>& batch, bool decode) {
  const auto& a = m.arch;
  const Shape expect{as_size(a.input_channels), as_size(a.input_size), as_size(a.input_size)};
  require(batch.rank() == 4 && Shape(batch.shape().begin() + 1, batch.shape().end()) == expect, ErrorKind::dimension,
          "model expects [B," + std::to_string(a.input_channels) + "," + std::to_string(a.input_size) + "," +
              std::to_string(a.input_size) + "] input, got " + shape_string(batch.shape()));
  const std::size_t B = batch.dim(0);
  ForwardVars f;
  f.input = g.constant(batch);
  Var h = f.input;
  std::size_t p = 0;
  for (const auto& l : a.encoder) {
    Var w = g.param(m.params[p++]);
    Var b = g.param(m.params[p++]);
    if (l.kind == LayerKind::conv) {
      h = g.activation(g.add_channel_bias(g.conv2d(h, w, layer_geometry(l, g.value(h).dim(2))), b), l.activation);
    } else {
      const Shape& s = g.value(h).shape();
      h = g.activation(g.dense(g.reshape(h, {B, shape_size(s) / B}), w, b), l.activation);
    }
  }
  f.latent = h;
  switch (m.variant) {
    case Variant::a:
    case Variant::plain: f.code = f.latent; break;
    case Variant::b:
    case Variant::aytekin: f.code = g.normalize_rows(f.latent, m.norm); break;
  }
  if (!decode) return f;

  const Shape map = encoder_map_shape(a);
  {
    const auto& l = a.decoder.front();
    Var w = g.param(m.params[p++]);
    Var b = g.param(m.params[p++]);
    h = g.activation(g.dense(f.code, w, b), l.activation);
    h = g.reshape(h, {B, map[0], map[1], map[2]});
  }
  for (std::size_t i = 1; i < a.decoder.size(); ++i) {
    const auto& l = a.decoder[i];
    Var w = g.param(m.params[p++]);
    Var b = g.param(m.params[p++]);
    h = g.activation(g.add_channel_bias(g.conv2d_transpose(h, w, layer_geometry(l, g.value(h).dim(2))), b),
                     l.activation);
  }
  f.recon = h;
  return f;
}

template <class T>
Var loss_node(Graph<T>& g, Model<T>& m, const ForwardVars& f) {
  Var rec = g.mse(f.recon, f.input);
  if (m.variant != Variant::a) return rec;
  return g.add(rec, g.mean(g.row_mean_square(f.latent)));
}

template <class T>
T model_loss(Model<T>& m, const Tensor<T>& batch) {
  require(batch.rank() == 4 && batch.dim(0) >= 1, ErrorKind::dimension, "loss needs a non-empty [B,C,H,W] batch");
  Graph<T> g;
  const ForwardVars f = forward(g, m, batch);
  return g.value(loss_node(g, m, f))[0];
}

template <class T>
T loss_ccae_a(Model<T>& m, const Tensor<T>& batch) {
  require(m.variant == Variant::a, ErrorKind::config, "loss_ccae_a needs a variant 'a' model");
  return model_loss(m, batch);
}

template <class T>
T loss_ccae_b(Model<T>& m, const Tensor<T>& batch) {
  require(m.variant == Variant::b, ErrorKind::config, "loss_ccae_b needs a variant 'b' model");
  return model_loss(m, batch);
}

template <class T>
Tensor<T> encode(Model<T>& m, const Tensor<T>& batch) {
  return chunked_rows(batch, m.latent_length(), [&](const Tensor<T>& x) {
    Graph<T> g;
    return g.value(forward(g, m, x, false).latent);
  });
}

template <class T>
Tensor<T> latent_features(Model<T>& m, const Tensor<T>& batch) {
  return chunked_rows(batch, m.latent_length(), [&](const Tensor<T>& x) {
    Graph<T> g;
    return g.value(forward(g, m, x, false).code);
  });
}

template <class T>
Tensor<T> decode(Model<T>& m, const Tensor<T>& code) {
  const std::size_t N = m.latent_length();
  require(code.rank() == 2 && code.dim(1) == N, ErrorKind::dimension,
          "decode expects [B," + std::to_string(N) + "], got " + shape_string(code.shape()));
  const std::size_t B = code.dim(0);
  const Shape map = encoder_map_shape(m.arch);
  Graph<T> g;
  std::size_t p = 2 * m.arch.encoder.size();
  Var h = g.constant(code);
  {
    Var w = g.param(m.params[p++]);
    Var b = g.param(m.params[p++]);
    h = g.reshape(g.activation(g.dense(h, w, b), m.arch.decoder.front().activation), {B, map[0], map[1], map[2]});
  }
  for (std::size_t i = 1; i < m.arch.decoder.size(); ++i) {
    const auto& l = m.arch.decoder[i];
    Var w = g.param(m.params[p++]);
    Var b = g.param(m.params[p++]);
    h = g.activation(g.add_channel_bias(g.conv2d_transpose(h, w, layer_geometry(l, g.value(h).dim(2))), b),
                     l.activation);
  }
  return g.value(h);
}

Tensor<double> normalize_latent_b(const Tensor<double>& y, RowNorm mode) {
  Graph<double> g;
  return g.value(g.normalize_rows(g.constant(y), mode));
}

template <class T>
Tensor<T> images_to_tensor(const std::vector<GrayImage>& images) {
  require(!images.empty(), ErrorKind::data, "no images");
  const int W = images[0].width, H = images[0].height;
  std::vector<T> data;
  data.reserve(images.size() * static_cast<std::size_t>(W) * H);
  for (std::size_t i = 0; i < images.size(); ++i) {
    require(images[i].width == W && images[i].height == H, ErrorKind::dimension,
            "image " + std::to_string(i) + " is " + std::to_string(images[i].width) + "x" +
                std::to_string(images[i].height) + ", expected " + std::to_string(W) + "x" + std::to_string(H));
    for (auto p : images[i].pixels) data.push_back(static_cast<T>(p) / T(255));
  }
  return Tensor<T>(Shape{images.size(), 1, as_size(H), as_size(W)}, std::move(data));
}

Tensor<double> resize_baseline(const std::vector<GrayImage>& images, int side) {
  require(!images.empty(), ErrorKind::data, "no images");
  const std::size_t n = as_size(side) * as_size(side);
  std::vector<double> out;
  out.reserve(images.size() * n);
  for (const auto& img : images) {
    const GrayImage small = resize_lanczos(img, side, side);
    for (auto p : small.pixels) out.push_back(p / 255.0);
  }
  return Tensor<double>(Shape{images.size(), n}, std::move(out));
}

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::config, "batch size must be >= 1");
  require(std::isfinite(lr) && lr >= 0, ErrorKind::config, "learning rate must be finite and >= 0");
  require(checkpoint_every >= 0, ErrorKind::config, "checkpoint interval must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs}, {"batch_size", batch_size}, {"lr", lr}, {"seed", seed}, {"checkpoint_every", checkpoint_every}};
}

template <class T>
TrainResult train(Model<T>& m, const Tensor<T>& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(data.rank() == 4 && data.dim(0) >= 1, ErrorKind::data, "training data must be a non-empty [M,C,H,W] tensor");
  const std::size_t M = data.dim(0), bs = std::min(M, as_size(cfg.batch_size));
  Adam<T> opt(AdamConfig{.lr = cfg.lr});
  const auto plist = m.parameter_list();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  auto write = [&](const std::filesystem::path& p, int epoch) {
    save_checkpoint(m, p, {{"epoch", epoch}, {"train", cfg.to_json()}});
    result.checkpoints.push_back(p);
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with explicit draws so the order depends only on the seed.
    for (std::size_t i = M - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
    double total = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0, batch_no = 1; start < M; start += bs, ++batch_no) {
      const std::size_t end = std::min(M, start + bs);
      const Tensor<T> x = gather_rows(data, order, start, end);
      Graph<T> g;
      Var loss;
      try {
        loss = loss_node(g, m, forward(g, m, x));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        ++result.skipped_steps;
        continue;
      }
      const double value = static_cast<double>(g.value(loss)[0]);
      if (!std::isfinite(value))
        fail(ErrorKind::numeric,
             "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no));
      g.backward(loss);
      opt.step(plist);
      total += value * static_cast<double>(end - start);
      seen += end - start;
    }
    require(seen > 0, ErrorKind::numeric,
            "every batch of epoch " + std::to_string(epoch) + " was skipped by the latent normalization guard");
    result.loss_curve.push_back(total / static_cast<double>(seen));
    if (on_epoch) on_epoch(epoch, result.loss_curve.back());
    if (!cfg.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 &&
        epoch != cfg.epochs) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_epoch%05d.pft", epoch);
      write(cfg.checkpoint_dir / name, epoch);
    }
  }
  if (!cfg.checkpoint_dir.empty()) write(cfg.checkpoint_dir / "model.pft", cfg.epochs);
  return result;
}

template <class T>
void save_checkpoint(const Model<T>& m, const std::filesystem::path& path, const nlohmann::json& extra) {
  TensorContainer c;
  c.meta = {{"kind", "model"},
            {"variant", to_string(m.variant)},
            {"norm", m.norm == RowNorm::unit_ball ? "unit_ball" : "mean_square"},
            {"seed", m.seed},
            {"precision", sizeof(T) == 4 ? "float32" : "float64"},
            {"architecture", m.arch.to_json()}};
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) c.meta[it.key()] = it.value();
  for (const auto& p : m.params)
    c.tensors.push_back({p.id(), p.value().shape(), std::vector<double>(p.value().data().begin(), p.value().data().end())});
  write_container(path, c);
}

template <class T>
Model<T> load_checkpoint(const std::filesystem::path& path) {
  const TensorContainer c = read_container(path);
  require(c.meta.value("kind", "") == "model", ErrorKind::data, path.string() + " is not a model checkpoint");
  Model<T> m;
  try {
    m = build_model<T>(parse_variant(c.meta.at("variant").get<std::string>()),
                       ArchitectureSpec::from_json(c.meta.at("architecture")), c.meta.at("seed").get<std::uint64_t>());
    m.norm = c.meta.at("norm").get<std::string>() == "unit_ball" ? RowNorm::unit_ball : RowNorm::mean_square;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  for (auto& p : m.params) {
    const TensorRecord& r = c.find(p.id());
    require(r.shape == p.value().shape(), ErrorKind::data,
            path.string() + ": tensor " + p.id() + " has shape " + shape_string(r.shape) + ", expected " +
                shape_string(p.value().shape()));
    for (std::size_t i = 0; i < r.values.size(); ++i) p.value()[i] = static_cast<T>(r.values[i]);
  }
  return m;
}

#define PF_MODEL_INSTANTIATE(T)                                                                          \
  template struct Model<T>;                                                                              \
  template Model<T> build_model<T>(Variant, const ArchitectureSpec&, std::uint64_t);                     \
  template Model<T> build_ccae<T>(Variant, int, std::uint64_t, int);                                     \
  template Model<T> build_aytekin<T>(std::uint64_t, int);                                                \
  template ForwardVars forward<T>(Graph<T>&, Model<T>&, const Tensor<T>&, bool);                         \
  template Var loss_node<T>(Graph<T>&, Model<T>&, const ForwardVars&);                                   \
  template T loss_ccae_a<T>(Model<T>&, const Tensor<T>&);                                                \
  template T loss_ccae_b<T>(Model<T>&, const Tensor<T>&);                                                \
  template T model_loss<T>(Model<T>&, const Tensor<T>&);                                                 \
  template Tensor<T> encode<T>(Model<T>&, const Tensor<T>&);                                             \
  template Tensor<T> decode<T>(Model<T>&, const Tensor<T>&);                                             \
  template Tensor<T> latent_features<T>(Model<T>&, const Tensor<T>&);                                    \
  template Tensor<T> images_to_tensor<T>(const std::vector<GrayImage>&);                                 \
  template TrainResult train<T>(Model<T>&, const Tensor<T>&, const TrainConfig&, const EpochCallback&); \
  template void save_checkpoint<T>(const Model<T>&, const std::filesystem::path&, const nlohmann::json&); \
  template Model<T> load_checkpoint<T>(const std::filesystem::path&);

PF_MODEL_INSTANTIATE(float)
PF_MODEL_INSTANTIATE(double)

}  // namespace pf
