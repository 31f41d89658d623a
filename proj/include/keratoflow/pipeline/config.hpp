#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "keratoflow/nn/optimizer.hpp"
#include "keratoflow/vae/vae.hpp"

namespace keratoflow::pipeline {

inline constexpr int kConfigVersion = 1;
inline constexpr std::size_t kDefaultVaeRepetitions = 20;
inline constexpr std::size_t kDefaultMlpRepetitions = 100;

/// Everything a command needs to run. Loaded from JSON (missing keys keep
/// their defaults, unknown keys are rejected) and then overridden by flags.
struct ExperimentConfig {
  int version = kConfigVersion;
  /// Cohort seed for synthetic presets; repetition r uses seed + r.
  std::uint64_t seed = 7;
  std::string preset = "separable";
  std::optional<std::size_t> n_patients;  // preset default when absent
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> encoding_table;
  std::optional<std::size_t> repetitions;  // command default when absent

  nn::TrainConfig train;  // train.seed is replaced per repetition

  std::vector<std::size_t> vae_encoder_hidden{128, 256};
  std::vector<std::size_t> vae_decoder_hidden{256, 128};
  vae::EmbedMode embed = vae::EmbedMode::mean;

  std::size_t gmm_restarts = 5;
  std::size_t gmm_max_iters = 500;
  double gmm_tol = 1e-8;
  double ellipse_std = 2.0;

  std::vector<std::size_t> mlp_hidden{128, 256};
  bool select_best_validation = false;

  // Execution only; neither is part of the experiment identity.
  std::filesystem::path out = "out";
  int jobs = 1;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  /// to_json() without out, jobs and the input path (the cohort is
  /// identified by its content hash instead).
  nlohmann::json canonical_json() const;
  /// FNV-1a of canonical_json(), as 16 hex digits.
  std::string hash() const;

  /// Throws ValidationError on inconsistent values.
  void validate() const;
};

std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace keratoflow::pipeline
