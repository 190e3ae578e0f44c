#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pf/adam.hpp"
#include "pf/autodiff.hpp"
#include "pf/image.hpp"

namespace pf {

/// a: latent L2 penalty; b: latent rescaled before decoding; plain: neither;
/// aytekin: the comparison model, latent projected onto the unit sphere.
enum class Variant { a, b, plain, aytekin };

Variant parse_variant(std::string_view name);
const char* to_string(Variant v) noexcept;

enum class LayerKind { conv, deconv, dense };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int kernel = 0;  // conv/deconv only
  int units = 0;   // filters or dense units
  int stride = 1;
  Activation activation = Activation::relu;
  std::string name;
};

/// Encoder: conv layers followed by one dense layer whose output is the latent.
/// Decoder: one dense projection back to the last encoder feature map, then
/// deconv layers ending in one channel at the input size.
struct ArchitectureSpec {
  int input_size = 256;
  int input_channels = 1;
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> decoder;

  int latent_length() const;
  nlohmann::json to_json() const;
  static ArchitectureSpec from_json(const nlohmann::json& j);
};

/// Four stride-2 conv stages (30/16, 15/32, 9/64, 3/128), dense latent, mirrored decoder.
ArchitectureSpec ccae_architecture(int input_size = 256, int latent_length = 128);
/// Conv[5,32,2] Conv[5,64,2] Conv[3,128,2] Dense[2048] Deconv[3,128,2] Deconv[5,64,2]
/// Deconv[5,32,2] Deconv[3,1,1].
ArchitectureSpec aytekin_architecture(int input_size = 256);

struct TraceRow {
  std::string layer;
  Shape output;  // [C,H,W] for feature maps, [N] for vectors
};

/// Per-layer output shapes of a single-sample forward pass, derived from the
/// same shape rules the ops use. Validates the architecture's invariants (decoder output
/// equals the input shape, latent is the last encoder layer) and throws
/// ErrorKind::config otherwise.
std::vector<TraceRow> trace_shapes(const ArchitectureSpec& spec);

/// Padding and stride used for a layer at a given input extent. Deconv layers use
/// the adjoint of a same-padded conv, so stride s multiplies the extent by s.
ConvGeometry layer_geometry(const LayerSpec& layer, std::size_t in_extent);

/// Number of trainable scalars.
std::size_t parameter_count(const ArchitectureSpec& spec);

template <class T>
struct Model {
  Variant variant = Variant::a;
  ArchitectureSpec arch;
  RowNorm norm = RowNorm::mean_square;  // b and aytekin only
  std::uint64_t seed = 0;
  std::vector<Parameter<T>> params;  // weight then bias, layer by layer

  std::vector<Parameter<T>*> parameter_list();
  std::size_t latent_length() const { return static_cast<std::size_t>(arch.latent_length()); }
};

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases, drawn from a generator seeded with `seed`.
template <class T>
Model<T> build_model(Variant variant, const ArchitectureSpec& arch, std::uint64_t seed);
template <class T>
Model<T> build_ccae(Variant variant, int latent_length, std::uint64_t seed, int input_size = 256);
template <class T>
Model<T> build_aytekin(std::uint64_t seed, int input_size = 256);

/// Nodes of one forward pass through an autoencoder.
struct ForwardVars {
  Var input;
  Var latent;  // encoder output y
  Var code;    // what the decoder consumes (normalized y for b and aytekin)
  Var recon;   // decoder output
};

template <class T>
ForwardVars forward(Graph<T>& g, Model<T>& m, const Tensor<T>& batch, bool decode = true);

/// Training objective for the model's variant:
///   a       mse(x, x') + mean_i (1/N) sum_j y_ij^2
///   b       mse(x, D(y / meansq(y)))
///   plain   mse(x, D(y))
///   aytekin mse(x, D(y / ||y||))
template <class T>
Var loss_node(Graph<T>& g, Model<T>& m, const ForwardVars& f);

template <class T>
T loss_ccae_a(Model<T>& m, const Tensor<T>& batch);
template <class T>
T loss_ccae_b(Model<T>& m, const Tensor<T>& batch);
template <class T>
T model_loss(Model<T>& m, const Tensor<T>& batch);

/// Raw latent rows y, [B,N].
template <class T>
Tensor<T> encode(Model<T>& m, const Tensor<T>& batch);
/// Decoder output for latent codes [B,N].
template <class T>
Tensor<T> decode(Model<T>& m, const Tensor<T>& code);
/// Clustering features: normalized latents for b and aytekin, raw latents otherwise.
template <class T>
Tensor<T> latent_features(Model<T>& m, const Tensor<T>& batch);

/// Row-wise y / meansq(y) (or y / ||y||). Throws ErrorKind::numeric when a row's
/// scale is at or below 1e-12.
Tensor<double> normalize_latent_b(const Tensor<double>& y, RowNorm mode = RowNorm::mean_square);

/// Images to a [M,1,H,W] tensor with values in [0,1]. All images must share a size.
template <class T>
Tensor<T> images_to_tensor(const std::vector<GrayImage>& images);

/// Each image Lanczos-resized to side x side and flattened, values in [0,1].
Tensor<double> resize_baseline(const std::vector<GrayImage>& images, int side = 32);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double lr = 3e-4;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 = final checkpoint only
  std::filesystem::path checkpoint_dir;  // created if missing; empty = no checkpoints

  void validate() const;
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean loss per epoch
  std::size_t skipped_steps = 0;   // batches skipped by the latent normalization guard
  std::vector<std::filesystem::path> checkpoints;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Adam over seeded shuffled mini-batches. A non-finite loss aborts with
/// ErrorKind::numeric naming the epoch and batch.
template <class T>
TrainResult train(Model<T>& m, const Tensor<T>& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Parameters and model description in the tensor container format.
template <class T>
void save_checkpoint(const Model<T>& m, const std::filesystem::path& path, const nlohmann::json& extra = {});
template <class T>
Model<T> load_checkpoint(const std::filesystem::path& path);

extern template struct Model<float>;
extern template struct Model<double>;

}  // namespace pf
