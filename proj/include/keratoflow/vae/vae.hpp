#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "keratoflow/domain/features.hpp"
#include "keratoflow/matrix.hpp"
#include "keratoflow/nn/network.hpp"
#include "keratoflow/nn/optimizer.hpp"
#include "keratoflow/random.hpp"

namespace keratoflow::vae {

inline constexpr std::size_t kLatentDim = 2;
/// logvar is clamped to [-kLogvarClamp, kLogvarClamp] before exponentiation.
inline constexpr double kLogvarClamp = 10.0;

using Latent = std::array<double, kLatentDim>;

struct VaeArchitecture {
  std::size_t input_dim = domain::kFeatureCount;
  std::vector<std::size_t> encoder_hidden{128, 256};
  std::vector<std::size_t> decoder_hidden{256, 128};
};

/// The encoder's last linear layer has 2 * kLatentDim outputs: the mean head
/// followed by the log-variance head, both reading the same trunk.
struct VaeModel {
  nn::DenseNetwork encoder;
  nn::DenseNetwork decoder;
  domain::FeatureStats feature_stats;

  std::size_t input_dim() const noexcept { return encoder.in_dim(); }

  nlohmann::json to_json() const;
  static VaeModel from_json(const nlohmann::json& doc);
};

VaeModel create_vae(const VaeArchitecture& arch, nn::InitScheme init, std::uint64_t seed);

struct LatentEmbedding {
  Latent mean{};
  Latent logvar{};  // already clamped
  std::optional<Latent> sample;
  std::optional<Latent> noise;  // the draw that produced `sample`
};

double clamp_logvar(double raw) noexcept;

/// Posterior mean and log-variance; no sampling. Throws ShapeError when the
/// vector does not match the encoder input.
LatentEmbedding encode(const VaeModel& model, const domain::FeatureVector& features);
/// One embedding per row.
std::vector<LatentEmbedding> encode(const VaeModel& model, const Matrix& standardized);

/// z = mean + exp(logvar / 2) * noise, with the noise recorded.
LatentEmbedding reparameterize(const LatentEmbedding& embedding, const Latent& noise);

/// KL(N(mean, exp(logvar)) || N(0, I)), closed form.
double kl_divergence(const LatentEmbedding& embedding);

struct ElboResult {
  double loss = 0.0;  // kl + reconstruction, batch means
  double kl = 0.0;
  double reconstruction = 0.0;
  nn::Gradients encoder;
  nn::Gradients decoder;
};

/// Single-sample ELBO with the given standard-normal noise (rows x kLatentDim).
/// Reconstruction is 0.5 * ||decoder(z) - x||^2, the unit-variance Gaussian
/// negative log-likelihood without its constant.
ElboResult elbo_loss(const VaeModel& model, const Matrix& batch, const Matrix& noise);
/// Draws the noise from `rng`.
ElboResult elbo_loss(const VaeModel& model, const Matrix& batch, Rng& rng);

struct VaeHistory {
  std::vector<double> loss;  // per epoch, mean over records
  std::vector<double> kl;
  std::vector<double> reconstruction;
};

struct TrainedVae {
  VaeModel model;
  VaeHistory history;
};

struct VaeOptions {
  VaeArchitecture architecture;
};

/// Trains on standardized features only; the model never sees a label.
/// Throws ValidationError for fewer than 10 rows or a width mismatch, and
/// TrainingError if the loss stops being finite.
TrainedVae train_vae(const Matrix& standardized, const domain::FeatureStats& stats,
                     const nn::TrainConfig& config, const VaeOptions& options = {});

enum class EmbedMode { mean, sample };

/// One 2-D point per row, in row order. `sample` mode draws z with `seed`.
std::vector<Latent> embed_cohort(const VaeModel& model, const Matrix& standardized,
                                 EmbedMode mode = EmbedMode::mean, std::uint64_t seed = 0);

}  // namespace keratoflow::vae
