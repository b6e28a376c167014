#include "beas/harness/runner.hpp"

#include <cstdio>

#include "beas/dp.hpp"
#include "beas/nn/network.hpp"

namespace beas::harness {

namespace {

constexpr std::uint64_t kTrainDataStream = 11;
constexpr std::uint64_t kTestDataStream = 12;
constexpr std::uint64_t kPartitionStream = 13;
constexpr std::uint64_t kDlgModelStream = 21;
constexpr std::uint64_t kDlgDummyStream = 22;
constexpr std::uint64_t kDlgPrivacyStream = 23;

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string dp_label(const dp::Policy& p) {
  switch (p.mode) {
    case dp::Mode::kNone:
      return "none";
    case dp::Mode::kGaussianNoise:
      return "noise(" + fmt_num(p.sigma) + ")";
    case dp::Mode::kValueClip:
      return "value_clip(" + fmt_num(p.clip_bound) + ")";
    case dp::Mode::kNormClip:
      return "norm_clip(" + fmt_num(p.clip_bound) + ")";
    case dp::Mode::kPrune:
      return "prune(" + fmt_num(p.sparsity) + ")";
  }
  return "unknown";
}

std::string defense_label(const agg::DefensePolicy& d) {
  if (d.use_multikrum && d.use_foolsgold) return "mk+fg";
  if (d.use_multikrum) return "mk";
  if (d.use_foolsgold) return "fg";
  return "nil";
}

}  // namespace

TrainTest load_datasets(const ExperimentConfig& config) {
  const auto& d = config.dataset;
  switch (d.kind) {
    case DatasetKind::kMnistIdx:
      return {load_mnist_idx(d.train_images, d.train_labels, d.train_cap),
              load_mnist_idx(d.test_images, d.test_labels, d.test_cap)};
    case DatasetKind::kSyntheticBlobs: {
      auto test_spec = d.blobs;
      test_spec.n = d.test_n;
      return {generate_blobs(d.blobs, derive_seed(config.seed, kTrainDataStream)),
              generate_blobs(test_spec, derive_seed(config.seed, kTestDataStream))};
    }
    case DatasetKind::kSyntheticImages: {
      auto test_spec = d.images;
      test_spec.n = d.test_n;
      return {generate_images(d.images, derive_seed(config.seed, kTrainDataStream)),
              generate_images(test_spec, derive_seed(config.seed, kTestDataStream))};
    }
  }
  throw ConfigError("dataset.kind: unsupported");
}

protocol::SimulationSetup build_setup(const ExperimentConfig& config,
                                      const TrainTest& data) {
  protocol::SimulationSetup setup;
  setup.spec = config.model_spec();
  setup.hyperparams = config.hyperparams;
  Rng rng = make_rng(config.seed, kPartitionStream);
  setup.client_data = protocol::partition_dataset(data.train, config.num_clients,
                                                  config.dirichlet_alpha, rng);
  const auto& a = config.attack;
  const std::size_t first_adversary =
      a.kind == AttackKind::kNone ? config.num_clients
                                  : config.num_clients - a.adversaries;
  for (std::size_t i = 0; i < config.num_clients; ++i) {
    if (i < first_adversary) {
      setup.behaviors.emplace_back(protocol::Honest{});
    } else if (a.kind == AttackKind::kLabelFlip) {
      setup.behaviors.emplace_back(protocol::LabelFlipper{a.c_src, a.c_target, a.swap});
    } else {
      setup.behaviors.emplace_back(protocol::Backdoor{a.backdoor});
    }
  }
  setup.attack_start_round = a.start_round;
  setup.test = data.test;
  setup.seed = config.seed;
  setup.genesis_epochs = config.genesis_epochs;
  setup.record_wallclock = config.record_wallclock;
  return setup;
}

RunOutput run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto data = load_datasets(config);
  RunOutput out;
  out.simulation = std::make_unique<protocol::Simulation>(build_setup(config, data));
  out.result = protocol::run_experiment(*out.simulation, config.rounds,
                                        config.target_accuracy);
  out.records = records_from(out.result.rounds);

  auto& s = out.summary;
  switch (config.dataset.kind) {
    case DatasetKind::kMnistIdx:
      s.dataset = "mnist";
      break;
    case DatasetKind::kSyntheticBlobs:
      s.dataset = "synthetic_blobs";
      break;
    case DatasetKind::kSyntheticImages:
      s.dataset = "synthetic_images";
      break;
  }
  s.dp = dp_label(config.hyperparams.dp);
  s.defense = defense_label(config.hyperparams.defense);
  s.attack = config.attack.kind == AttackKind::kNone       ? "none"
             : config.attack.kind == AttackKind::kLabelFlip ? "label_flip"
                                                            : "backdoor";
  s.adversaries = config.attack.kind == AttackKind::kNone ? 0 : config.attack.adversaries;
  s.global_blocks = out.records.size();
  if (out.records.empty()) {
    s.final_accuracy = out.result.genesis.accuracy;
    s.final_backdoor_accuracy = out.result.genesis_backdoor;
  } else {
    s.final_accuracy = out.records.back().global_accuracy;
    s.final_backdoor_accuracy = out.records.back().backdoor_accuracy;
  }
  return out;
}

void write_run_outputs(const RunOutput& run, const std::filesystem::path& dir) {
  write_metrics(run.records, dir);
  write_summary(run.summary, dir);
  run.simulation->channel().save(dir / "ledger.bin");
}

DlgRun run_dlg(const ExperimentConfig& config) {
  validate(config);
  auto cfg = config;
  // Only one example is needed; keep ingestion small.
  cfg.dataset.test_cap = 1;
  cfg.dataset.train_cap = 1;
  cfg.dataset.images.n = 1;
  cfg.dataset.blobs.n = 1;
  cfg.dataset.test_n = 1;
  const auto data = load_datasets(cfg);

  DlgRun run;
  const auto row = data.test.row(0);
  run.truth = Eigen::Map<const nn::RowMatrix>(row.data(), 1,
                                               static_cast<Eigen::Index>(row.size()));
  run.truth_label = data.test.label(0);

  const auto spec = config.dlg_model_spec();
  Rng model_rng = make_rng(config.seed, kDlgModelStream);
  const auto model = nn::ModelParams::glorot(spec, model_rng);
  nn::Batch batch{run.truth, {run.truth_label}};
  Rng privacy_rng = make_rng(config.seed, kDlgPrivacyStream);
  const auto shared = dp::apply_policy(nn::compute_gradients(model, batch),
                                       config.hyperparams.dp, privacy_rng);

  attacks::DlgOptions opts;
  opts.iterations = config.dlg.iterations;
  opts.history = config.dlg.history;
  opts.truth = run.truth;
  Rng dummy_rng = make_rng(config.seed, kDlgDummyStream);
  run.result = attacks::dlg_reconstruct(model, shared, 1, dummy_rng, opts);
  return run;
}

}  // namespace beas::harness
