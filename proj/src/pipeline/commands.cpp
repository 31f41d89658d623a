#include "keratoflow/pipeline/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "keratoflow/classifier/mlp.hpp"
#include "keratoflow/csv.hpp"
#include "keratoflow/domain/cohort_csv.hpp"
#include "keratoflow/domain/grader.hpp"
#include "keratoflow/error.hpp"
#include "keratoflow/gmm/gmm.hpp"
#include "keratoflow/metrics/metrics.hpp"
#include "keratoflow/nn/checkpoint.hpp"
#include "keratoflow/nn/kernels.hpp"
#include "keratoflow/pipeline/svg.hpp"
#include "keratoflow/synth/cohort.hpp"
#include "keratoflow/vae/vae.hpp"

namespace keratoflow::pipeline {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

/// Collects emitted files so the report can list them.
class Emitter {
 public:
  explicit Emitter(fs::path root) : root_(std::move(root)) {}

  void text(const std::string& name, std::string_view content) {
    write_text_file(root_ / name, content);
    files_.insert(name);
  }
  void json_file(const std::string& name, const json& doc) { text(name, doc.dump(2) + "\n"); }
  void add(const std::string& name) { files_.insert(name); }

  std::vector<std::string> files() const { return {files_.begin(), files_.end()}; }

 private:
  fs::path root_;
  std::set<std::string> files_;
};

json versions() {
  return {{"keratoflow", kVersion},
          {"config", kConfigVersion},
          {"feature_schema", domain::kFeatureSchemaVersion},
          {"checkpoint", 1}};
}

std::string grade_label(std::size_t class_index) { return "grade " + std::to_string(class_index + 1); }

/// 0-based class labels when every record carries a grade.
std::optional<std::vector<std::size_t>> labels_of(const std::vector<domain::PatientRecord>& records) {
  std::vector<std::size_t> labels;
  for (const auto& r : records) {
    if (!r.ak_grade) return std::nullopt;
    labels.push_back(r.ak_grade->class_index());
  }
  return labels;
}

json grade_distribution(std::span<const std::size_t> labels) {
  std::array<std::size_t, domain::kGradeCount> counts{};
  for (auto l : labels) ++counts[l];
  json out = json::object();
  for (std::size_t g = 0; g < counts.size(); ++g) out[std::to_string(g + 1)] = counts[g];
  return out;
}

std::string distribution_summary(std::span<const std::size_t> labels) {
  std::array<std::size_t, domain::kGradeCount> counts{};
  for (auto l : labels) ++counts[l];
  std::string out;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    out += "  grade " + std::to_string(g + 1) + ": " + std::to_string(counts[g]) + "\n";
  }
  return out;
}

json band_json(const classifier::EpochBand& band) {
  return {{"mean", band.mean}, {"variance", band.variance}};
}

std::vector<metrics::RocCurve> labelled_curves(const metrics::MulticlassAuc& auc) {
  auto curves = auc.curves;
  for (auto& c : curves) {
    if (c.class_id != "micro" && c.class_id != "macro") c.class_id = "grade " + c.class_id;
  }
  return curves;
}

std::string roc_csv(const metrics::MulticlassAuc& auc) {
  std::string out = "class,auc,fpr,tpr\n";
  for (const auto& c : auc.curves) {
    for (const auto& p : c.points) {
      out += c.class_id + "," + format_double(c.auc) + "," + format_double(p.fpr) + "," +
             format_double(p.tpr) + "\n";
    }
  }
  return out;
}

/// Writes one prediction row per (repetition, record).
void append_predictions(std::string& out, std::size_t repetition,
                        const std::vector<domain::PatientRecord>& records,
                        std::span<const std::size_t> rows, std::span<const std::size_t> labels,
                        const Matrix& probabilities) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto p = probabilities.row(i);
    const auto predicted = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    out += std::to_string(repetition) + "," + csv_escape(record_id(records[rows[i]])) + "," +
           std::to_string(labels[i] + 1) + "," + std::to_string(predicted + 1);
    for (double v : p) out += "," + format_double(v);
    out += "\n";
  }
}

constexpr const char* kPredictionsHeader = "repetition,id,true_grade,predicted_grade,p1,p2,p3,p4\n";

json report_header(const std::string& command, const ExperimentConfig& config,
                   const LoadedCohort& cohort) {
  return {{"experiment", {{"command", command}, {"id", command + "-" + config.hash()}}},
          {"config", config.canonical_json()},
          {"cohort", {{"source", cohort.source}, {"records", cohort.records.size()}}}};
}

void finish_report(json& report, Emitter& emit, const ExperimentConfig& config,
                   const std::vector<std::uint64_t>& seeds) {
  emit.add("report.json");
  report["provenance"] = {{"config_hash", config.hash()},
                          {"seeds", seeds},
                          {"seed_rule", "repetition r uses seed + r"},
                          {"versions", versions()},
                          {"files", emit.files()}};
  emit.json_file("report.json", report);
}

nn::TrainConfig train_config(const ExperimentConfig& config, std::uint64_t seed) {
  nn::TrainConfig t = config.train;
  t.seed = seed;
  return t;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

// ---- run-vae ---------------------------------------------------------------

struct VaeRun {
  std::uint64_t seed = 0;
  vae::TrainedVae trained;
  std::vector<vae::Latent> points;
  gmm::GmmModel gmm;
  gmm::ClusterAssignment assignment;
  std::optional<metrics::Alignment> alignment;
};

}  // namespace

std::string record_id(const domain::PatientRecord& record) {
  return record.patient_id + "-" + std::string(domain::to_string(record.eye));
}

domain::EncodingTable load_encoding_table(const ExperimentConfig& config) {
  if (!config.encoding_table) return domain::EncodingTable::defaults();
  json doc;
  try {
    doc = json::parse(read_text_file(*config.encoding_table));
  } catch (const json::exception& e) {
    throw ValidationError(config.encoding_table->string() + ": " + e.what());
  }
  return domain::EncodingTable::from_json(doc);
}

LoadedCohort load_cohort(const ExperimentConfig& config) {
  LoadedCohort out;
  if (config.input) {
    const std::string text = read_text_file(*config.input);
    std::istringstream in(text);
    out.records = domain::parse_cohort_csv(in, config.input->filename().string());
    out.source = {{"kind", "csv"}, {"fnv1a", hex64(fnv1a(text))}};
    return out;
  }
  auto cohort = synth::CohortConfig::preset_named(config.preset, config.seed);
  if (config.n_patients) cohort.n_patients = *config.n_patients;
  out.records = synth::generate_cohort(cohort);
  out.source = {{"kind", "synthetic"},
                {"preset", config.preset},
                {"seed", config.seed},
                {"n_patients", cohort.n_patients}};
  return out;
}

CommandResult cmd_generate(const ExperimentConfig& config) {
  config.validate();
  auto cohort = synth::CohortConfig::preset_named(config.preset, config.seed);
  if (config.n_patients) cohort.n_patients = *config.n_patients;
  const auto records = synth::generate_cohort(cohort);
  Emitter emit(config.out);
  emit.text("cohort.csv", domain::format_cohort_csv(records));

  std::vector<std::size_t> labels;
  for (const auto& r : records) labels.push_back(r.ak_grade->class_index());
  CommandResult result;
  result.files = emit.files();
  result.report = {{"records", records.size()},
                   {"patients", cohort.n_patients},
                   {"grade_distribution", grade_distribution(labels)}};
  result.summary = "generated " + std::to_string(records.size()) + " records from " +
                   std::to_string(cohort.n_patients) + " patients (" + config.preset +
                   " preset, seed " + std::to_string(config.seed) + ")\n" +
                   distribution_summary(labels);
  return result;
}

CommandResult cmd_grade(const ExperimentConfig& config) {
  config.validate();
  if (!config.input) throw ValidationError("grade needs an input cohort CSV (--input)");
  auto records = domain::read_cohort_csv(*config.input);
  std::size_t changed = 0;
  std::vector<std::size_t> labels;
  for (auto& r : records) {
    const auto grade = domain::grade_ak(r);
    if (r.ak_grade && *r.ak_grade != grade) ++changed;
    r.ak_grade = grade;
    labels.push_back(grade.class_index());
  }
  if (changed > 0) spdlog::warn("{} stored grades disagree with the grading rules and were replaced", changed);
  Emitter emit(config.out);
  emit.text("graded.csv", domain::format_cohort_csv(records));
  CommandResult result;
  result.files = emit.files();
  result.report = {{"records", records.size()},
                   {"replaced", changed},
                   {"grade_distribution", grade_distribution(labels)}};
  result.summary = "graded " + std::to_string(records.size()) + " records (" +
                   std::to_string(changed) + " stored grades replaced)\n" +
                   distribution_summary(labels);
  return result;
}

CommandResult cmd_run_vae(const ExperimentConfig& config) {
  config.validate();
  const auto cohort = load_cohort(config);
  const auto table = load_encoding_table(config);
  const auto& records = cohort.records;
  const std::size_t reps = config.repetitions.value_or(kDefaultVaeRepetitions);

  // Labels are read for evaluation only; training sees the feature matrix.
  const auto labels = labels_of(records);
  std::vector<std::string> warnings;
  if (!labels) {
    warnings.push_back("cohort has unlabeled records; evaluation skipped");
    spdlog::warn("{}", warnings.back());
  }

  const auto standardized = domain::standardize(domain::encode_cohort(records, table));
  vae::VaeOptions vae_options;
  vae_options.architecture.encoder_hidden = config.vae_encoder_hidden;
  vae_options.architecture.decoder_hidden = config.vae_decoder_hidden;

  std::vector<VaeRun> runs(reps);
  nn::kernels::parallel_for(reps, config.jobs, [&](std::size_t r) {
    VaeRun& run = runs[r];
    run.seed = config.seed + r;
    run.trained = vae::train_vae(standardized.features, standardized.stats,
                                 train_config(config, run.seed), vae_options);
    run.points = vae::embed_cohort(run.trained.model, standardized.features, config.embed, run.seed);
    gmm::EmOptions em;
    em.k = domain::kGradeCount;
    em.seed = run.seed;
    em.restarts = config.gmm_restarts;
    em.max_iters = config.gmm_max_iters;
    em.tol = config.gmm_tol;
    run.gmm = gmm::fit_em(run.points, em);
    run.assignment = gmm::assign_clusters(run.gmm, run.points);
    if (labels) run.alignment = metrics::align_clusters(run.assignment.hard_labels, *labels);
    spdlog::info("run-vae repetition {} (seed {}): loss {:.4f}{}", r, run.seed,
                 run.trained.history.loss.back(),
                 run.alignment ? fmt::format(", aligned accuracy {:.4f}", run.alignment->accuracy) : "");
  });

  json report = report_header("run-vae", config, cohort);
  Emitter emit(config.out);
  std::vector<std::uint64_t> seeds;
  json per_rep = json::array();
  for (std::size_t r = 0; r < reps; ++r) {
    const auto& run = runs[r];
    seeds.push_back(run.seed);
    json entry = {{"repetition", r},
                  {"seed", run.seed},
                  {"first_loss", run.trained.history.loss.front()},
                  {"final_loss", run.trained.history.loss.back()},
                  {"log_likelihood", run.gmm.final_log_likelihood},
                  {"em_iterations", run.gmm.iterations},
                  {"em_converged", run.gmm.converged}};
    if (run.alignment) {
      entry["accuracy"] = run.alignment->accuracy;
      json perm = json::array();
      for (auto c : run.alignment->permutation) perm.push_back(c + 1);
      entry["cluster_to_grade"] = perm;
    }
    per_rep.push_back(entry);
  }
  report["repetitions"] = per_rep;

  std::string summary = "run-vae: " + std::to_string(reps) + " repetitions on " +
                        std::to_string(records.size()) + " records\n";
  const VaeRun& first = runs.front();
  std::string embedding = "id,z1,z2,true_grade\n";
  std::string assignments = "id,cluster,r1,r2,r3,r4\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string id = csv_escape(record_id(records[i]));
    embedding += id + "," + format_double(first.points[i][0]) + "," +
                 format_double(first.points[i][1]) + "," +
                 (records[i].ak_grade ? std::to_string(records[i].ak_grade->value()) : "") + "\n";
    assignments += id + "," + std::to_string(first.assignment.hard_labels[i] + 1);
    for (double v : first.assignment.responsibilities.row(i)) assignments += "," + format_double(v);
    assignments += "\n";
  }
  emit.text("embedding.csv", embedding);
  emit.text("assignments.csv", assignments);
  emit.json_file("checkpoint_vae.json",
                 {{"model", first.trained.model.to_json()},
                  {"seed", first.seed},
                  {"repetition", 0},
                  {"train", config.canonical_json()["train"]},
                  {"loss_history", first.trained.history.loss}});
  json ellipses = json::array();
  for (std::size_t c = 0; c < first.gmm.k(); ++c) {
    const auto e = gmm::confidence_ellipse(first.gmm, c, config.ellipse_std);
    ellipses.push_back({{"component", c + 1},
                        {"center", {e.center[0], e.center[1]}},
                        {"semi_axes", {e.semi_major, e.semi_minor}},
                        {"angle", e.angle},
                        {"n_std", config.ellipse_std}});
  }
  json gmm_doc = first.gmm.to_json();
  gmm_doc["ellipses"] = ellipses;
  emit.json_file("gmm.json", gmm_doc);

  // Fig. 2/3 style scatters from repetition 0.
  svg::ScatterPlot truth_plot{"Latent space by grade", "z1", "z2", {}, {}};
  if (labels) {
    truth_plot.series.resize(domain::kGradeCount);
    for (std::size_t g = 0; g < domain::kGradeCount; ++g) truth_plot.series[g].label = grade_label(g);
    for (std::size_t i = 0; i < records.size(); ++i) {
      truth_plot.series[(*labels)[i]].points.push_back(first.points[i]);
    }
  } else {
    truth_plot.series.push_back({"unlabeled", {first.points.begin(), first.points.end()}});
  }
  emit.text("latent_truth.svg", svg::render_scatter(truth_plot));

  svg::ScatterPlot cluster_plot{"Latent space by GMM cluster", "z1", "z2", {}, {}};
  cluster_plot.series.resize(first.gmm.k());
  for (std::size_t c = 0; c < first.gmm.k(); ++c) {
    cluster_plot.series[c].label =
        "cluster " + std::to_string(c + 1) +
        (first.alignment ? " (" + grade_label(first.alignment->permutation[c]) + ")" : "");
    cluster_plot.ellipses.push_back({cluster_plot.series[c].label,
                                     gmm::confidence_ellipse(first.gmm, c, config.ellipse_std), c});
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    cluster_plot.series[first.assignment.hard_labels[i]].points.push_back(first.points[i]);
  }
  emit.text("latent_clusters.svg", svg::render_scatter(cluster_plot));

  if (labels) {
    std::vector<double> accuracies;
    Matrix pooled(reps * records.size(), domain::kGradeCount);
    std::vector<std::size_t> pooled_labels;
    std::vector<std::size_t> all_rows(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) all_rows[i] = i;
    std::string predictions = kPredictionsHeader;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& run = runs[r];
      accuracies.push_back(run.alignment->accuracy);
      // Class score: responsibility of the component aligned to that class.
      Matrix aligned(records.size(), domain::kGradeCount);
      for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t c = 0; c < run.gmm.k(); ++c) {
          aligned(i, run.alignment->permutation[c]) = run.assignment.responsibilities(i, c);
        }
        std::copy(aligned.row(i).begin(), aligned.row(i).end(),
                  pooled.row(r * records.size() + i).begin());
        pooled_labels.push_back((*labels)[i]);
      }
      append_predictions(predictions, r, records, all_rows, *labels, aligned);
    }
    const auto stats = metrics::repetition_stats(accuracies);
    const auto auc = metrics::multiclass_auc(pooled, pooled_labels);
    std::vector<std::size_t> predicted;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto p = runs[r].alignment->apply(runs[r].assignment.hard_labels);
      predicted.insert(predicted.end(), p.begin(), p.end());
    }
    report["cohort"]["grade_distribution"] = grade_distribution(*labels);
    report["accuracy"] = stats.to_json();
    report["auc"] = auc.to_json();
    report["confusion"] = metrics::confusion_matrix(pooled_labels, predicted).to_json();
    warnings.insert(warnings.end(), auc.warnings.begin(), auc.warnings.end());
    emit.text("predictions.csv", predictions);
    emit.text("roc.csv", roc_csv(auc));
    emit.text("roc.svg", svg::render_roc({"One-vs-rest ROC (GMM responsibilities)", labelled_curves(auc)}));
    summary += "aligned accuracy: mean " + fixed(stats.mean) + ", std " + fixed(stats.std_dev) +
               ", max " + fixed(stats.max) + "\n";
    for (std::size_t c = 0; c < auc.per_class.size(); ++c) {
      summary += "  AUC " + grade_label(c) + ": " +
                 (auc.per_class[c] ? fixed(*auc.per_class[c]) : std::string("undefined")) + "\n";
    }
  }
  report["warnings"] = warnings;
  finish_report(report, emit, config, seeds);

  CommandResult result;
  result.report = std::move(report);
  result.files = emit.files();
  result.summary = summary + "wrote " + std::to_string(result.files.size()) + " files to " +
                   config.out.string() + "\n";
  return result;
}

CommandResult cmd_run_mlp(const ExperimentConfig& config) {
  config.validate();
  const auto cohort = load_cohort(config);
  const auto table = load_encoding_table(config);
  const auto& records = cohort.records;
  const auto labels = labels_of(records);
  if (!labels) {
    for (const auto& r : records) {
      if (!r.ak_grade) {
        throw ValidationError("protocol error: record " + record_id(r) +
                              " has no ak_grade; run-mlp needs a fully labeled cohort");
      }
    }
  }

  classifier::LabeledCohort data{domain::encode_cohort(records, table), *labels};
  classifier::RepetitionOptions options;
  options.repetitions = config.repetitions.value_or(kDefaultMlpRepetitions);
  options.base_seed = config.seed;
  options.jobs = config.jobs;
  options.mlp.hidden = config.mlp_hidden;
  options.mlp.select_best_validation = config.select_best_validation;
  const auto rep = classifier::run_repetitions(data, config.train, options);

  json report = report_header("run-mlp", config, cohort);
  report["cohort"]["grade_distribution"] = grade_distribution(*labels);
  Emitter emit(config.out);
  std::vector<std::uint64_t> seeds;
  json per_rep = json::array();
  std::string predictions = kPredictionsHeader;
  for (std::size_t r = 0; r < rep.runs.size(); ++r) {
    const auto& run = rep.runs[r];
    seeds.push_back(run.seed);
    per_rep.push_back({{"repetition", r},
                       {"seed", run.seed},
                       {"test_accuracy", run.test_accuracy},
                       {"first_val_loss", run.history.val_loss.front()},
                       {"final_val_loss", run.history.val_loss.back()},
                       {"final_val_accuracy", run.history.val_accuracy.back()},
                       {"final_train_loss", run.history.train_loss.back()},
                       {"split",
                        {{"train", run.split.train.size()},
                         {"validation", run.split.validation.size()},
                         {"test", run.split.test.size()}}}});
    append_predictions(predictions, r, records, run.split.test, run.test_labels,
                       run.test_probabilities);
  }
  report["repetitions"] = per_rep;
  report["test_accuracy"] = rep.test_accuracy.to_json();
  report["epochs"] = {{"val_accuracy", band_json(rep.val_accuracy)},
                      {"val_loss", band_json(rep.val_loss)},
                      {"train_loss", band_json(rep.train_loss)}};
  report["auc"] = rep.auc.to_json();
  report["confusion"] = rep.confusion.to_json();
  report["warnings"] = rep.auc.warnings;

  std::string curves = "epoch,val_accuracy_mean,val_accuracy_variance,val_loss_mean,val_loss_variance,"
                       "train_loss_mean,train_loss_variance\n";
  for (std::size_t e = 0; e < rep.val_loss.mean.size(); ++e) {
    curves += std::to_string(e + 1) + "," + format_double(rep.val_accuracy.mean[e]) + "," +
              format_double(rep.val_accuracy.variance[e]) + "," + format_double(rep.val_loss.mean[e]) +
              "," + format_double(rep.val_loss.variance[e]) + "," +
              format_double(rep.train_loss.mean[e]) + "," + format_double(rep.train_loss.variance[e]) +
              "\n";
  }
  emit.text("predictions.csv", predictions);
  emit.text("curves.csv", curves);
  emit.text("roc.csv", roc_csv(rep.auc));
  emit.json_file("checkpoint_mlp.json",
                 {{"model", rep.runs.front().model.to_json()},
                  {"seed", rep.runs.front().seed},
                  {"repetition", 0},
                  {"train", config.canonical_json()["train"]},
                  {"history",
                   {{"train_loss", rep.runs.front().history.train_loss},
                    {"val_loss", rep.runs.front().history.val_loss},
                    {"val_accuracy", rep.runs.front().history.val_accuracy}}}});
  emit.text("val_accuracy.svg",
            svg::render_curves({"Validation accuracy (mean, shaded +/- 1 sd)", "epoch", "accuracy",
                                {{"validation accuracy", rep.val_accuracy.mean, rep.val_accuracy.variance}}}));
  emit.text("val_loss.svg",
            svg::render_curves({"Validation loss (mean, shaded +/- 1 sd)", "epoch", "cross-entropy",
                                {{"validation loss", rep.val_loss.mean, rep.val_loss.variance}}}));
  emit.text("roc.svg", svg::render_roc({"One-vs-rest ROC (pooled test folds)", labelled_curves(rep.auc)}));
  finish_report(report, emit, config, seeds);

  std::string summary = "run-mlp: " + std::to_string(rep.runs.size()) + " repetitions x " +
                        std::to_string(config.train.epochs) + " epochs on " +
                        std::to_string(records.size()) + " records\n";
  summary += "test accuracy: mean " + fixed(rep.test_accuracy.mean) + ", std " +
             fixed(rep.test_accuracy.std_dev) + ", max " + fixed(rep.test_accuracy.max) + "\n";
  for (std::size_t c = 0; c < rep.auc.per_class.size(); ++c) {
    summary += "  AUC " + grade_label(c) + ": " +
               (rep.auc.per_class[c] ? fixed(*rep.auc.per_class[c]) : std::string("undefined")) + "\n";
  }
  summary += "  AUC micro: " + fixed(rep.auc.micro) + ", macro: " + fixed(rep.auc.macro) + "\n";

  CommandResult result;
  result.report = std::move(report);
  result.files = emit.files();
  result.summary = summary + "wrote " + std::to_string(result.files.size()) + " files to " +
                   config.out.string() + "\n";
  return result;
}

CommandResult cmd_evaluate(const ExperimentConfig& config) {
  config.validate();
  if (!config.input) throw ValidationError("evaluate needs a predictions CSV (--input)");
  const auto table = read_csv(*config.input);
  const std::array<std::string, 8> needed{"repetition", "id", "true_grade", "predicted_grade",
                                          "p1", "p2", "p3", "p4"};
  std::array<std::size_t, 8> col{};
  for (std::size_t i = 0; i < needed.size(); ++i) {
    col[i] = table.column(needed[i]);
    if (col[i] == std::string::npos) {
      throw ValidationError(config.input->string() + ": missing column '" + needed[i] + "'");
    }
  }
  std::map<long, std::pair<std::size_t, std::size_t>> per_rep;  // hits, total
  Matrix probabilities(table.rows.size(), domain::kGradeCount);
  std::vector<std::size_t> truth, predicted;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = config.input->filename().string() + " row " + std::to_string(i + 2);
    const long rep = parse_long(row[col[0]], where + " repetition");
    const auto t = domain::AkGrade(static_cast<int>(parse_long(row[col[2]], where + " true_grade")));
    for (std::size_t c = 0; c < domain::kGradeCount; ++c) {
      probabilities(i, c) = parse_double(row[col[4 + c]], where + " p" + std::to_string(c + 1));
    }
    const auto p = probabilities.row(i);
    const auto argmax = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    truth.push_back(t.class_index());
    predicted.push_back(argmax);
    auto& [hits, total] = per_rep[rep];
    hits += argmax == t.class_index();
    ++total;
  }
  if (truth.empty()) throw ValidationError(config.input->string() + ": no predictions");
  std::vector<double> accuracies;
  json reps = json::array();
  for (const auto& [rep, counts] : per_rep) {
    const double acc = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    accuracies.push_back(acc);
    reps.push_back({{"repetition", rep}, {"accuracy", acc}, {"records", counts.second}});
  }
  const auto stats = metrics::repetition_stats(accuracies);
  const auto auc = metrics::multiclass_auc(probabilities, truth);
  json report = {{"source", {{"kind", "predictions"}, {"fnv1a", hex64(fnv1a(read_text_file(*config.input)))}}},
                 {"repetitions", reps},
                 {"accuracy", stats.to_json()},
                 {"auc", auc.to_json()},
                 {"confusion", metrics::confusion_matrix(truth, predicted).to_json()}};
  Emitter emit(config.out);
  emit.json_file("evaluation.json", report);

  CommandResult result;
  result.report = std::move(report);
  result.files = emit.files();
  result.summary = "evaluated " + std::to_string(truth.size()) + " predictions over " +
                   std::to_string(per_rep.size()) + " repetitions\naccuracy: mean " +
                   fixed(stats.mean) + ", std " + fixed(stats.std_dev) + ", max " +
                   fixed(stats.max) + "\n  AUC micro: " + fixed(auc.micro) +
                   ", macro: " + fixed(auc.macro) + "\n";
  return result;
}

CommandResult cmd_plot(const ExperimentConfig& config) {
  config.validate();
  if (!config.input) throw ValidationError("plot needs a CSV written by run-vae or run-mlp (--input)");
  const auto table = read_csv(*config.input);
  const std::string name = config.input->filename().string();
  auto need = [&](const char* column) {
    const auto c = table.column(column);
    if (c == std::string::npos) throw ValidationError(name + ": missing column '" + column + "'");
    return c;
  };
  auto number = [&](std::size_t row, std::size_t c) {
    return parse_double(table.rows[row][c], name + " row " + std::to_string(row + 2));
  };

  Emitter emit(config.out);
  const auto& h = table.header;
  auto has = [&](const char* column) { return std::find(h.begin(), h.end(), column) != h.end(); };

  if (has("z1") && has("z2")) {
    const auto z1 = need("z1"), z2 = need("z2");
    const auto grade_col = table.column("true_grade");
    svg::ScatterPlot plot{"Latent space by grade", "z1", "z2", {}, {}};
    std::map<std::string, std::size_t> series_of;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      std::string key = grade_col == std::string::npos || table.rows[r][grade_col].empty()
                            ? "unlabeled"
                            : "grade " + table.rows[r][grade_col];
      auto [it, inserted] = series_of.try_emplace(key, 0);
      if (inserted) {
        it->second = plot.series.size();
        plot.series.push_back({key, {}});
      }
      plot.series[it->second].points.push_back({number(r, z1), number(r, z2)});
    }
    std::sort(plot.series.begin(), plot.series.end(),
              [](const auto& a, const auto& b) { return a.label < b.label; });
    emit.text("latent_truth.svg", svg::render_scatter(plot));
  } else if (has("fpr") && has("tpr") && has("class")) {
    const auto cls = need("class"), auc = need("auc"), fpr = need("fpr"), tpr = need("tpr");
    svg::RocPlot plot{"One-vs-rest ROC", {}};
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string& id = table.rows[r][cls];
      if (plot.curves.empty() || plot.curves.back().class_id != id) {
        metrics::RocCurve curve;
        curve.class_id = id;
        curve.auc = number(r, auc);
        plot.curves.push_back(curve);
      }
      plot.curves.back().points.push_back({number(r, fpr), number(r, tpr)});
    }
    for (auto& c : plot.curves) {
      if (c.class_id != "micro" && c.class_id != "macro") c.class_id = "grade " + c.class_id;
    }
    emit.text("roc.svg", svg::render_roc(plot));
  } else if (has("epoch") && has("val_loss_mean")) {
    auto column = [&](const char* c) {
      const auto idx = need(c);
      std::vector<double> out;
      for (std::size_t r = 0; r < table.rows.size(); ++r) out.push_back(number(r, idx));
      return out;
    };
    emit.text("val_accuracy.svg",
              svg::render_curves({"Validation accuracy (mean, shaded +/- 1 sd)", "epoch", "accuracy",
                                  {{"validation accuracy", column("val_accuracy_mean"),
                                    column("val_accuracy_variance")}}}));
    emit.text("val_loss.svg",
              svg::render_curves({"Validation loss (mean, shaded +/- 1 sd)", "epoch", "cross-entropy",
                                  {{"validation loss", column("val_loss_mean"),
                                    column("val_loss_variance")}}}));
  } else {
    throw ValidationError(name + ": not an embedding, roc or curves CSV");
  }

  CommandResult result;
  result.files = emit.files();
  for (const auto& f : result.files) result.summary += "wrote " + (config.out / f).string() + "\n";
  return result;
}

}  // namespace keratoflow::pipeline
