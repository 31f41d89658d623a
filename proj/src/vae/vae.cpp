#include "keratoflow/vae/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "keratoflow/error.hpp"
#include "keratoflow/nn/checkpoint.hpp"

namespace keratoflow::vae {

namespace {

constexpr std::uint64_t kEncoderInitStream = 0;
constexpr std::uint64_t kDecoderInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr int kCheckpointSchema = 1;

void check_width(const VaeModel& model, std::size_t cols) {
  if (cols != model.input_dim()) {
    throw ShapeError("VAE expects " + std::to_string(model.input_dim()) + " features, got " +
                     std::to_string(cols));
  }
}

LatentEmbedding embedding_from_row(std::span<const double> head) {
  LatentEmbedding e;
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    e.mean[d] = head[d];
    e.logvar[d] = clamp_logvar(head[kLatentDim + d]);
  }
  return e;
}

}  // namespace

nlohmann::json VaeModel::to_json() const {
  return {{"schema_version", kCheckpointSchema},
          {"latent_dim", kLatentDim},
          {"encoder", nn::network_to_json(encoder)},
          {"decoder", nn::network_to_json(decoder)},
          {"feature_stats", feature_stats.to_json()}};
}

VaeModel VaeModel::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("latent_dim").get<std::size_t>() != kLatentDim) {
      throw ValidationError("VAE checkpoint latent_dim must be 2");
    }
    VaeModel m;
    m.encoder = nn::network_from_json(doc.at("encoder"));
    m.decoder = nn::network_from_json(doc.at("decoder"));
    m.feature_stats = domain::FeatureStats::from_json(doc.at("feature_stats"));
    if (m.encoder.out_dim() != 2 * kLatentDim || m.decoder.in_dim() != kLatentDim ||
        m.decoder.out_dim() != m.encoder.in_dim()) {
      throw ValidationError("VAE checkpoint encoder/decoder shapes do not fit together");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed VAE checkpoint: ") + e.what());
  }
}

VaeModel create_vae(const VaeArchitecture& arch, nn::InitScheme init, std::uint64_t seed) {
  std::vector<std::size_t> enc{arch.input_dim};
  enc.insert(enc.end(), arch.encoder_hidden.begin(), arch.encoder_hidden.end());
  enc.push_back(2 * kLatentDim);
  std::vector<std::size_t> dec{kLatentDim};
  dec.insert(dec.end(), arch.decoder_hidden.begin(), arch.decoder_hidden.end());
  dec.push_back(arch.input_dim);

  VaeModel m;
  m.encoder = nn::DenseNetwork::create(enc, nn::Activation::relu, nn::Activation::linear, init,
                                       derive_seed(seed, kEncoderInitStream));
  m.decoder = nn::DenseNetwork::create(dec, nn::Activation::relu, nn::Activation::linear, init,
                                       derive_seed(seed, kDecoderInitStream));
  return m;
}

double clamp_logvar(double raw) noexcept { return std::clamp(raw, -kLogvarClamp, kLogvarClamp); }

LatentEmbedding encode(const VaeModel& model, const domain::FeatureVector& features) {
  check_width(model, features.values.size());
  Matrix input(1, features.values.size());
  std::copy(features.values.begin(), features.values.end(), input.row(0).begin());
  return encode(model, input).front();
}

std::vector<LatentEmbedding> encode(const VaeModel& model, const Matrix& standardized) {
  check_width(model, standardized.cols());
  const Matrix head = nn::predict(model.encoder, standardized);
  std::vector<LatentEmbedding> out;
  out.reserve(head.rows());
  for (std::size_t r = 0; r < head.rows(); ++r) out.push_back(embedding_from_row(head.row(r)));
  return out;
}

LatentEmbedding reparameterize(const LatentEmbedding& embedding, const Latent& noise) {
  LatentEmbedding out = embedding;
  Latent z{};
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    z[d] = embedding.mean[d] + std::exp(0.5 * clamp_logvar(embedding.logvar[d])) * noise[d];
  }
  out.sample = z;
  out.noise = noise;
  return out;
}

double kl_divergence(const LatentEmbedding& embedding) {
  double kl = 0.0;
  for (std::size_t d = 0; d < kLatentDim; ++d) {
    const double lv = clamp_logvar(embedding.logvar[d]);
    const double mu = embedding.mean[d];
    // exp(lv) - 1 - lv loses everything to cancellation near 0; expm1 keeps it.
    kl += mu * mu + (std::expm1(lv) - lv);
  }
  return 0.5 * kl;
}

ElboResult elbo_loss(const VaeModel& model, const Matrix& batch, const Matrix& noise) {
  check_width(model, batch.cols());
  const std::size_t n = batch.rows();
  if (n == 0) throw ValidationError("ELBO of an empty batch");
  if (noise.rows() != n || noise.cols() != kLatentDim) {
    throw ShapeError("ELBO noise must be " + std::to_string(n) + "x2, got " + noise.shape_string());
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  const auto enc_cache = nn::forward(model.encoder, batch);
  const Matrix& head = enc_cache.output;

  Matrix z(n, kLatentDim);
  Matrix scale(n, kLatentDim);
  ElboResult result;
  double kl_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < kLatentDim; ++d) {
      const double mu = head(i, d);
      const double lv = clamp_logvar(head(i, kLatentDim + d));
      scale(i, d) = std::exp(0.5 * lv);
      z(i, d) = mu + scale(i, d) * noise(i, d);
      kl_sum += 0.5 * (mu * mu + std::expm1(lv) - lv);
    }
  }

  const auto dec_cache = nn::forward(model.decoder, z);
  const Matrix& recon = dec_cache.output;
  Matrix d_recon(n, batch.cols());
  double rec_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < batch.cols(); ++c) {
      const double diff = recon(i, c) - batch(i, c);
      rec_sum += 0.5 * diff * diff;
      d_recon(i, c) = diff * inv_n;
    }
  }
  result.kl = kl_sum * inv_n;
  result.reconstruction = rec_sum * inv_n;
  result.loss = result.kl + result.reconstruction;

  result.decoder = nn::backward(model.decoder, dec_cache, d_recon);
  const Matrix& dz = result.decoder.input;

  Matrix d_head(n, 2 * kLatentDim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < kLatentDim; ++d) {
      const double mu = head(i, d);
      const double raw_lv = head(i, kLatentDim + d);
      d_head(i, d) = dz(i, d) + mu * inv_n;
      if (raw_lv > -kLogvarClamp && raw_lv < kLogvarClamp) {
        const double s = scale(i, d);
        d_head(i, kLatentDim + d) =
            dz(i, d) * noise(i, d) * 0.5 * s + 0.5 * (s * s - 1.0) * inv_n;
      }
    }
  }
  result.encoder = nn::backward(model.encoder, enc_cache, d_head);
  return result;
}

ElboResult elbo_loss(const VaeModel& model, const Matrix& batch, Rng& rng) {
  Matrix noise(batch.rows(), kLatentDim);
  for (double& v : noise.values()) v = rng.normal();
  return elbo_loss(model, batch, noise);
}

TrainedVae train_vae(const Matrix& standardized, const domain::FeatureStats& stats,
                     const nn::TrainConfig& config, const VaeOptions& options) {
  config.validate();
  if (standardized.rows() < 10) {
    throw ValidationError("VAE training needs at least 10 samples, got " +
                          std::to_string(standardized.rows()));
  }
  if (standardized.cols() != options.architecture.input_dim) {
    throw ShapeError("VAE expects " + std::to_string(options.architecture.input_dim) +
                     " features, got " + std::to_string(standardized.cols()));
  }

  TrainedVae out;
  out.model = create_vae(options.architecture, config.init, config.seed);
  out.model.feature_stats = stats;
  auto& model = out.model;
  auto enc_state = nn::OptimizerState::for_network(model.encoder);
  auto dec_state = nn::OptimizerState::for_network(model.decoder);
  Rng shuffle_rng(config.seed, kShuffleStream);
  Rng noise_rng(config.seed, kNoiseStream);

  const std::size_t n = standardized.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> rows;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    double loss_sum = 0.0, kl_sum = 0.0, rec_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                  order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix batch = standardized.select_rows(rows);
      auto step = elbo_loss(model, batch, noise_rng);
      if (!std::isfinite(step.loss)) {
        throw TrainingError("non-finite ELBO", static_cast<long>(epoch), -1);
      }
      const double w = static_cast<double>(rows.size());
      loss_sum += step.loss * w;
      kl_sum += step.kl * w;
      rec_sum += step.reconstruction * w;
      nn::optimizer_step(model.encoder, step.encoder, enc_state, config, epoch);
      nn::optimizer_step(model.decoder, step.decoder, dec_state, config, epoch);
    }
    out.history.loss.push_back(loss_sum / static_cast<double>(n));
    out.history.kl.push_back(kl_sum / static_cast<double>(n));
    out.history.reconstruction.push_back(rec_sum / static_cast<double>(n));
  }
  return out;
}

std::vector<Latent> embed_cohort(const VaeModel& model, const Matrix& standardized, EmbedMode mode,
                                 std::uint64_t seed) {
  const auto embeddings = encode(model, standardized);
  std::vector<Latent> points;
  points.reserve(embeddings.size());
  Rng rng(seed, kNoiseStream);
  for (const auto& e : embeddings) {
    if (mode == EmbedMode::mean) {
      points.push_back(e.mean);
    } else {
      Latent noise{rng.normal(), rng.normal()};
      points.push_back(*reparameterize(e, noise).sample);
    }
  }
  return points;
}

}  // namespace keratoflow::vae
