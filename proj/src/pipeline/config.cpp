#include "keratoflow/pipeline/config.hpp"

#include <cstdio>
#include <set>

#include "keratoflow/csv.hpp"
#include "keratoflow/error.hpp"

namespace keratoflow::pipeline {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ValidationError("config " + where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw ValidationError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key) && !obj.at(key).is_null()) target = obj.at(key).get<T>();
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& target) {
  if (obj.contains(key) && !obj.at(key).is_null()) target = obj.at(key).get<T>();
}

std::string_view to_string(vae::EmbedMode mode) {
  return mode == vae::EmbedMode::mean ? "mean" : "sample";
}

vae::EmbedMode embed_from_string(const std::string& s) {
  if (s == "mean") return vae::EmbedMode::mean;
  if (s == "sample") return vae::EmbedMode::sample;
  throw ValidationError("vae.embed must be 'mean' or 'sample', got '" + s + "'");
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig c;
  try {
    reject_unknown(doc,
                   {"version", "seed", "preset", "n_patients", "input", "encoding_table",
                    "repetitions", "train", "vae", "gmm", "mlp", "out", "jobs"},
                   "");
    read(doc, "version", c.version);
    if (c.version != kConfigVersion) {
      throw ValidationError("config version " + std::to_string(c.version) + " is not supported");
    }
    read(doc, "seed", c.seed);
    read(doc, "preset", c.preset);
    read(doc, "n_patients", c.n_patients);
    std::optional<std::string> path;
    read(doc, "input", path);
    if (path) c.input = *path;
    path.reset();
    read(doc, "encoding_table", path);
    if (path) c.encoding_table = *path;
    read(doc, "repetitions", c.repetitions);
    if (doc.contains("train")) {
      const auto& t = doc.at("train");
      reject_unknown(t, {"epochs", "batch_size", "learning_rate", "optimizer", "init", "adam"},
                     "train.");
      read(t, "epochs", c.train.epochs);
      read(t, "batch_size", c.train.batch_size);
      read(t, "learning_rate", c.train.learning_rate);
      if (t.contains("optimizer")) {
        c.train.optimizer = nn::optimizer_from_string(t.at("optimizer").get<std::string>());
      }
      if (t.contains("init")) c.train.init = nn::init_scheme_from_string(t.at("init").get<std::string>());
      if (t.contains("adam")) {
        const auto& a = t.at("adam");
        reject_unknown(a, {"beta1", "beta2", "epsilon"}, "train.adam.");
        read(a, "beta1", c.train.adam.beta1);
        read(a, "beta2", c.train.adam.beta2);
        read(a, "epsilon", c.train.adam.epsilon);
      }
    }
    if (doc.contains("vae")) {
      const auto& v = doc.at("vae");
      reject_unknown(v, {"encoder_hidden", "decoder_hidden", "embed"}, "vae.");
      read(v, "encoder_hidden", c.vae_encoder_hidden);
      read(v, "decoder_hidden", c.vae_decoder_hidden);
      if (v.contains("embed")) c.embed = embed_from_string(v.at("embed").get<std::string>());
    }
    if (doc.contains("gmm")) {
      const auto& g = doc.at("gmm");
      reject_unknown(g, {"restarts", "max_iters", "tol", "ellipse_std"}, "gmm.");
      read(g, "restarts", c.gmm_restarts);
      read(g, "max_iters", c.gmm_max_iters);
      read(g, "tol", c.gmm_tol);
      read(g, "ellipse_std", c.ellipse_std);
    }
    if (doc.contains("mlp")) {
      const auto& m = doc.at("mlp");
      reject_unknown(m, {"hidden", "select_best_validation"}, "mlp.");
      read(m, "hidden", c.mlp_hidden);
      read(m, "select_best_validation", c.select_best_validation);
    }
    std::string out;
    read(doc, "out", out);
    if (!out.empty()) c.out = out;
    read(doc, "jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

json ExperimentConfig::to_json() const {
  json doc = canonical_json();
  doc["input"] = input ? json(input->generic_string()) : json(nullptr);
  doc["out"] = out.generic_string();
  doc["jobs"] = jobs;
  return doc;
}

json ExperimentConfig::canonical_json() const {
  return {
      {"version", version},
      {"seed", seed},
      {"preset", preset},
      {"n_patients", opt(n_patients)},
      {"encoding_table", encoding_table ? json(encoding_table->generic_string()) : json(nullptr)},
      {"repetitions", opt(repetitions)},
      {"train",
       {{"epochs", train.epochs},
        {"batch_size", train.batch_size},
        {"learning_rate", train.learning_rate},
        {"optimizer", nn::to_string(train.optimizer)},
        {"init", nn::to_string(train.init)},
        {"adam",
         {{"beta1", train.adam.beta1}, {"beta2", train.adam.beta2}, {"epsilon", train.adam.epsilon}}}}},
      {"vae",
       {{"encoder_hidden", vae_encoder_hidden},
        {"decoder_hidden", vae_decoder_hidden},
        {"embed", to_string(embed)}}},
      {"gmm",
       {{"restarts", gmm_restarts},
        {"max_iters", gmm_max_iters},
        {"tol", gmm_tol},
        {"ellipse_std", ellipse_std}}},
      {"mlp", {{"hidden", mlp_hidden}, {"select_best_validation", select_best_validation}}},
  };
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(canonical_json().dump())); }

void ExperimentConfig::validate() const {
  train.validate();
  if (preset != "separable" && preset != "realistic") {
    throw ValidationError("preset must be separable or realistic, got '" + preset + "'");
  }
  if (n_patients && *n_patients == 0) throw ValidationError("n_patients must be at least 1");
  if (repetitions && *repetitions == 0) throw ValidationError("repetitions must be at least 1");
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  if (gmm_restarts == 0 || gmm_max_iters == 0) {
    throw ValidationError("gmm restarts and max_iters must be positive");
  }
  if (!(ellipse_std > 0.0)) throw ValidationError("gmm.ellipse_std must be positive");
  if (input && !std::filesystem::exists(*input)) {
    throw ValidationError("input file does not exist: " + input->string());
  }
  if (encoding_table && !std::filesystem::exists(*encoding_table)) {
    throw ValidationError("encoding table does not exist: " + encoding_table->string());
  }
}

}  // namespace keratoflow::pipeline
