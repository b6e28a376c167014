#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "beas/attacks.hpp"
#include "beas/harness/config.hpp"
#include "beas/harness/metrics.hpp"
#include "beas/protocol.hpp"

namespace beas::harness {

struct TrainTest {
  nn::Dataset train;
  nn::Dataset test;
};

TrainTest load_datasets(const ExperimentConfig& config);

// Partitions the training data and assigns behaviors (adversaries are the
// last clients, so the genesis creator is always honest).
protocol::SimulationSetup build_setup(const ExperimentConfig& config,
                                      const TrainTest& data);

struct RunOutput {
  std::unique_ptr<protocol::Simulation> simulation;
  protocol::ExperimentResult result;
  std::vector<MetricsRecord> records;
  RunSummary summary;
};

RunOutput run_experiment(const ExperimentConfig& config);

// metrics.csv, summary.csv and ledger.bin under `dir`.
void write_run_outputs(const RunOutput& run, const std::filesystem::path& dir);

struct DlgRun {
  attacks::DlgResult result;
  nn::RowMatrix truth;
  int truth_label = 0;
};

// Gradient of one synthetic image under a fresh model, passed through the
// configured privacy policy, then attacked.
DlgRun run_dlg(const ExperimentConfig& config);

}  // namespace beas::harness
