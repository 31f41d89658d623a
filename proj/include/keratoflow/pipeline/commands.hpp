#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "keratoflow/domain/features.hpp"
#include "keratoflow/domain/record.hpp"
#include "keratoflow/pipeline/config.hpp"

namespace keratoflow::pipeline {

struct CommandResult {
  /// The report written to <out>/report.json (or evaluation.json); empty
  /// for commands without one.
  nlohmann::json report;
  std::vector<std::string> files;  // relative to config.out, sorted
  std::string summary;             // printed to stdout by the CLI
};

struct LoadedCohort {
  std::vector<domain::PatientRecord> records;
  nlohmann::json source;  // synthetic preset parameters or the CSV content hash
};

/// The input CSV when set, otherwise the synthetic preset.
LoadedCohort load_cohort(const ExperimentConfig& config);
domain::EncodingTable load_encoding_table(const ExperimentConfig& config);

/// "<patient_id>-<eye>"
std::string record_id(const domain::PatientRecord& record);

CommandResult cmd_generate(const ExperimentConfig& config);
CommandResult cmd_grade(const ExperimentConfig& config);
CommandResult cmd_run_vae(const ExperimentConfig& config);
CommandResult cmd_run_mlp(const ExperimentConfig& config);
CommandResult cmd_evaluate(const ExperimentConfig& config);
CommandResult cmd_plot(const ExperimentConfig& config);

}  // namespace keratoflow::pipeline
