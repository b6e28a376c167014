#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beas/attacks.hpp"
#include "beas/error.hpp"
#include "beas/harness/data.hpp"
#include "beas/ledger/block.hpp"
#include "beas/nn/model.hpp"

namespace beas::harness {

inline constexpr int kConfigFormatVersion = 1;

enum class DatasetKind { kMnistIdx, kSyntheticBlobs, kSyntheticImages };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kSyntheticImages;
  // mnist_idx; relative paths resolve against the config file's directory.
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_cap = 12000;
  std::size_t test_cap = 2000;
  // synthetic_*: `n` training rows from `spec`, `test_n` test rows.
  BlobSpec blobs;
  ImageSpec images;
  std::size_t test_n = 1000;
};

enum class AttackKind { kNone, kLabelFlip, kBackdoor };

struct AttackConfig {
  AttackKind kind = AttackKind::kNone;
  std::size_t adversaries = 0;  // the last `adversaries` clients
  std::uint64_t start_round = 1;
  int c_src = 0;
  int c_target = 1;
  bool swap = false;
  attacks::BackdoorSpec backdoor;
};

struct DlgConfig {
  std::vector<std::size_t> hidden{32};
  nn::Activation activation = nn::Activation::kSigmoid;
  int iterations = 300;
  int history = 10;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  std::size_t num_clients = 10;
  double dirichlet_alpha = 0.9;
  std::vector<std::size_t> hidden{64, 64};
  nn::Activation activation = nn::Activation::kRelu;
  ledger::Hyperparams hyperparams;
  int genesis_epochs = 0;
  AttackConfig attack;
  std::uint64_t rounds = 40;
  std::optional<double> target_accuracy;
  std::filesystem::path output_dir = "out";
  bool record_wallclock = false;
  DlgConfig dlg;

  std::size_t input_dim() const;
  std::size_t num_classes() const;
  nn::ModelSpec model_spec() const;
  nn::ModelSpec dlg_model_spec() const;
};

// Every violated constraint, each prefixed with its field path.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// JSON (comments allowed). Syntax errors report line and column; semantic
// errors are collected and thrown together.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Throws ConfigValidationError listing every problem.
void validate(const ExperimentConfig& config);

// Fully resolved config, defaults included, as pretty JSON.
std::string describe(const ExperimentConfig& config);

}  // namespace beas::harness
