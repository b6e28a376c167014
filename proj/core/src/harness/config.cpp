#include "beas/harness/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "beas/dp.hpp"

namespace beas::harness {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

std::string kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kMnistIdx:
      return "mnist_idx";
    case DatasetKind::kSyntheticBlobs:
      return "synthetic_blobs";
    case DatasetKind::kSyntheticImages:
      return "synthetic_images";
  }
  return "unknown";
}

std::string kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::kNone:
      return "none";
    case AttackKind::kLabelFlip:
      return "label_flip";
    case AttackKind::kBackdoor:
      return "backdoor";
  }
  return "unknown";
}

// Walks the JSON tree, recording type errors and unknown keys by field path
// instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    errors_.push_back(path + ": expected an object");
    return false;
  }

  void allow_only(const json& j, const std::string& prefix,
                  std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
      if (!allowed.contains(k)) errors_.push_back(at(prefix, k) + ": unknown key");
    }
  }

  template <class T>
  void get(const json& j, const std::string& prefix, const char* key, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    const auto path = at(prefix, key);
    if constexpr (std::is_same_v<T, bool>) {
      if (v.is_boolean()) {
        out = v.get<bool>();
        return;
      }
      errors_.push_back(path + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) {
        out = v.get<T>();
        return;
      }
      errors_.push_back(path + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (v.is_number_integer()) {
        out = v.get<T>();
        return;
      }
      errors_.push_back(path + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (v.is_number()) {
        out = v.get<T>();
        return;
      }
      errors_.push_back(path + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (v.is_string()) {
        out = v.get<std::string>();
        return;
      }
      errors_.push_back(path + ": expected a string");
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  template <class T>
  void list(const json& j, const std::string& prefix, const char* key,
            std::vector<T>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    const auto path = at(prefix, key);
    if (!v.is_array()) {
      errors_.push_back(path + ": expected an array");
      return;
    }
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_unsigned_v<T> ? v[i].is_number_unsigned()
                                            : v[i].is_number_integer();
      if (!ok) {
        errors_.push_back(path + "[" + std::to_string(i) + "]: expected an integer");
        return;
      }
      tmp.push_back(v[i].get<T>());
    }
    out = std::move(tmp);
  }

  static std::string at(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
  }

  void error(std::string msg) { errors_.push_back(std::move(msg)); }

 private:
  std::vector<std::string>& errors_;
};

void read_dataset(Reader& r, const json& j, const std::filesystem::path& base,
                  DatasetConfig& d) {
  if (!r.object(j, "dataset")) return;
  std::string kind = "synthetic_images";
  r.get(j, "dataset", "kind", kind);
  if (kind == "mnist_idx") {
    d.kind = DatasetKind::kMnistIdx;
    r.allow_only(j, "dataset",
                 {"kind", "train_images", "train_labels", "test_images",
                  "test_labels", "train_cap", "test_cap"});
    for (auto [key, slot] : {std::pair{"train_images", &d.train_images},
                             std::pair{"train_labels", &d.train_labels},
                             std::pair{"test_images", &d.test_images},
                             std::pair{"test_labels", &d.test_labels}}) {
      std::string p;
      r.get(j, "dataset", key, p);
      if (p.empty()) {
        r.error(std::string("dataset.") + key + ": required for mnist_idx");
        continue;
      }
      std::filesystem::path path(p);
      *slot = path.is_absolute() ? path : base / path;
    }
    r.get(j, "dataset", "train_cap", d.train_cap);
    r.get(j, "dataset", "test_cap", d.test_cap);
  } else if (kind == "synthetic_blobs") {
    d.kind = DatasetKind::kSyntheticBlobs;
    r.allow_only(j, "dataset",
                 {"kind", "n", "test_n", "dim", "classes", "separation", "noise"});
    r.get(j, "dataset", "n", d.blobs.n);
    r.get(j, "dataset", "test_n", d.test_n);
    r.get(j, "dataset", "dim", d.blobs.dim);
    r.get(j, "dataset", "classes", d.blobs.classes);
    r.get(j, "dataset", "separation", d.blobs.separation);
    r.get(j, "dataset", "noise", d.blobs.noise);
  } else if (kind == "synthetic_images") {
    d.kind = DatasetKind::kSyntheticImages;
    r.allow_only(j, "dataset",
                 {"kind", "n", "test_n", "height", "width", "classes", "period",
                  "contrast", "noise"});
    r.get(j, "dataset", "n", d.images.n);
    r.get(j, "dataset", "test_n", d.test_n);
    r.get(j, "dataset", "height", d.images.height);
    r.get(j, "dataset", "width", d.images.width);
    r.get(j, "dataset", "classes", d.images.classes);
    r.get(j, "dataset", "period", d.images.period);
    r.get(j, "dataset", "contrast", d.images.contrast);
    r.get(j, "dataset", "noise", d.images.noise);
  } else {
    r.error("dataset.kind: unknown kind '" + kind +
            "' (mnist_idx, synthetic_blobs, synthetic_images)");
  }
}

void read_activation(Reader& r, const json& j, const std::string& prefix,
                     nn::Activation& out) {
  std::string name;
  r.get(j, prefix, "activation", name);
  if (name.empty()) return;
  try {
    out = nn::activation_from_string(name);
  } catch (const Error&) {
    r.error(prefix + ".activation: unknown activation '" + name + "'");
  }
}

void read_attack(Reader& r, const json& j, AttackConfig& a, bool& pattern_given) {
  if (!r.object(j, "attack")) return;
  std::string kind = "none";
  r.get(j, "attack", "kind", kind);
  if (kind == "none") {
    a.kind = AttackKind::kNone;
    r.allow_only(j, "attack", {"kind"});
    return;
  }
  if (kind == "label_flip") {
    a.kind = AttackKind::kLabelFlip;
    r.allow_only(j, "attack",
                 {"kind", "adversaries", "start_round", "c_src", "c_target", "swap"});
    r.get(j, "attack", "c_src", a.c_src);
    r.get(j, "attack", "c_target", a.c_target);
    r.get(j, "attack", "swap", a.swap);
  } else if (kind == "backdoor") {
    a.kind = AttackKind::kBackdoor;
    r.allow_only(j, "attack",
                 {"kind", "adversaries", "start_round", "pattern", "target_label",
                  "poison_fraction", "alpha", "gamma", "lr", "epochs",
                  "step_schedule", "step_rate", "stop_loss"});
    auto& b = a.backdoor;
    if (j.contains("pattern")) {
      const auto& p = j.at("pattern");
      bool ok = p.is_array();
      std::vector<std::pair<std::size_t, double>> pattern;
      if (ok) {
        for (const auto& px : p) {
          if (!(px.is_array() && px.size() == 2 && px[0].is_number_unsigned() &&
                px[1].is_number())) {
            ok = false;
            break;
          }
          pattern.emplace_back(px[0].get<std::size_t>(), px[1].get<double>());
        }
      }
      if (ok) {
        b.pattern = std::move(pattern);
        pattern_given = true;
      } else {
        r.error("attack.pattern: expected an array of [pixel, value] pairs");
      }
    }
    r.get(j, "attack", "target_label", b.target_label);
    r.get(j, "attack", "poison_fraction", b.poison_fraction);
    r.get(j, "attack", "alpha", b.alpha);
    r.get(j, "attack", "gamma", b.gamma);
    r.get(j, "attack", "lr", b.lr);
    r.get(j, "attack", "epochs", b.epochs);
    b.step_schedule = {std::max(1, 2 * b.epochs / 3)};
    r.list(j, "attack", "step_schedule", b.step_schedule);
    r.get(j, "attack", "step_rate", b.step_rate);
    r.get(j, "attack", "stop_loss", b.stop_loss);
  } else {
    r.error("attack.kind: unknown kind '" + kind + "' (none, label_flip, backdoor)");
    return;
  }
  r.get(j, "attack", "adversaries", a.adversaries);
  r.get(j, "attack", "start_round", a.start_round);
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<std::string> errors)
    : ConfigError(join(errors)), errors_(std::move(errors)) {}

std::size_t ExperimentConfig::input_dim() const {
  switch (dataset.kind) {
    case DatasetKind::kMnistIdx:
      return 784;
    case DatasetKind::kSyntheticBlobs:
      return dataset.blobs.dim;
    case DatasetKind::kSyntheticImages:
      return dataset.images.height * dataset.images.width;
  }
  return 0;
}

std::size_t ExperimentConfig::num_classes() const {
  switch (dataset.kind) {
    case DatasetKind::kMnistIdx:
      return 10;
    case DatasetKind::kSyntheticBlobs:
      return dataset.blobs.classes;
    case DatasetKind::kSyntheticImages:
      return dataset.images.classes;
  }
  return 0;
}

nn::ModelSpec ExperimentConfig::model_spec() const {
  nn::ModelSpec spec;
  spec.layer_sizes.push_back(input_dim());
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(num_classes());
  spec.activation = activation;
  return spec;
}

nn::ModelSpec ExperimentConfig::dlg_model_spec() const {
  nn::ModelSpec spec;
  spec.layer_sizes.push_back(input_dim());
  spec.layer_sizes.insert(spec.layer_sizes.end(), dlg.hidden.begin(),
                          dlg.hidden.end());
  spec.layer_sizes.push_back(num_classes());
  spec.activation = dlg.activation;
  return spec;
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> e;
  const auto& hp = c.hyperparams;
  if (c.num_clients < 1) e.push_back("num_clients: must be >= 1");
  if (!(c.dirichlet_alpha > 0.0)) e.push_back("dirichlet_alpha: must be > 0");
  if (hp.t < 1) e.push_back("t: must be >= 1");
  if (hp.c < 1) e.push_back("c: must be >= 1");
  if (hp.epochs < 1) e.push_back("epochs: must be >= 1");
  if (!(hp.lr > 0.0)) e.push_back("lr: must be > 0");
  if (hp.batch_size < 1) e.push_back("batch_size: must be >= 1");
  if (c.genesis_epochs < 0) e.push_back("genesis_epochs: must be >= 0");
  if (c.target_accuracy && !(*c.target_accuracy > 0.0 && *c.target_accuracy <= 1.0)) {
    e.push_back("target_accuracy: must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    if (c.hidden[i] < 1) e.push_back("model.hidden[" + std::to_string(i) + "]: must be >= 1");
  }
  for (std::size_t i = 0; i < c.dlg.hidden.size(); ++i) {
    if (c.dlg.hidden[i] < 1) e.push_back("dlg.hidden[" + std::to_string(i) + "]: must be >= 1");
  }
  if (c.dlg.iterations < 1) e.push_back("dlg.iterations: must be >= 1");
  if (c.dlg.history < 1) e.push_back("dlg.history: must be >= 1");

  try {
    hp.dp.validate();
  } catch (const ConfigError& ex) {
    e.push_back(ex.what());
  }

  const auto& d = hp.defense;
  if (d.use_multikrum && 2 * d.f + 2 >= c.num_clients) {
    e.push_back("defense.f: multi-krum requires 2f + 2 < n; got f = " +
                std::to_string(d.f) + ", n = " + std::to_string(c.num_clients));
  }
  if (!(d.fg_confidence > 0.0)) e.push_back("defense.fg_confidence: must be > 0");
  if (d.n_k_cap < 1) e.push_back("defense.n_k_cap: must be >= 1");

  const auto& ds = c.dataset;
  switch (ds.kind) {
    case DatasetKind::kMnistIdx:
      for (auto [key, p] : {std::pair{"train_images", &ds.train_images},
                            std::pair{"train_labels", &ds.train_labels},
                            std::pair{"test_images", &ds.test_images},
                            std::pair{"test_labels", &ds.test_labels}}) {
        if (!p->empty() && !std::filesystem::is_regular_file(*p)) {
          e.push_back(std::string("dataset.") + key + ": file not found: " + p->string());
        }
      }
      if (ds.train_cap < 1) e.push_back("dataset.train_cap: must be >= 1");
      if (ds.test_cap < 1) e.push_back("dataset.test_cap: must be >= 1");
      if (ds.train_cap < c.num_clients) {
        e.push_back("dataset.train_cap: fewer rows than clients");
      }
      break;
    case DatasetKind::kSyntheticBlobs:
      if (ds.blobs.n < c.num_clients) e.push_back("dataset.n: fewer rows than clients");
      if (ds.blobs.dim < 1) e.push_back("dataset.dim: must be >= 1");
      if (ds.blobs.classes < 2) e.push_back("dataset.classes: must be >= 2");
      if (ds.blobs.classes > ds.blobs.dim && ds.blobs.dim < 2) {
        e.push_back("dataset.dim: must be >= 2 when classes > dim");
      }
      if (!(ds.blobs.noise >= 0.0)) e.push_back("dataset.noise: must be >= 0");
      if (ds.test_n < 1) e.push_back("dataset.test_n: must be >= 1");
      break;
    case DatasetKind::kSyntheticImages:
      if (ds.images.n < c.num_clients) e.push_back("dataset.n: fewer rows than clients");
      if (ds.images.height < 1) e.push_back("dataset.height: must be >= 1");
      if (ds.images.width < 1) e.push_back("dataset.width: must be >= 1");
      if (ds.images.classes < 2) e.push_back("dataset.classes: must be >= 2");
      if (!(ds.images.period > 0.0)) e.push_back("dataset.period: must be > 0");
      if (!(ds.images.noise >= 0.0)) e.push_back("dataset.noise: must be >= 0");
      if (ds.test_n < 1) e.push_back("dataset.test_n: must be >= 1");
      break;
  }

  const auto& a = c.attack;
  const auto classes = static_cast<int>(c.num_classes());
  if (a.kind != AttackKind::kNone) {
    if (a.adversaries >= c.num_clients) {
      e.push_back("attack.adversaries: must be < num_clients (client 0 creates the "
                  "genesis block and stays honest)");
    }
    if (a.start_round < 1) e.push_back("attack.start_round: must be >= 1");
  }
  if (a.kind == AttackKind::kLabelFlip) {
    if (a.c_src < 0 || a.c_src >= classes) e.push_back("attack.c_src: not a valid class");
    if (a.c_target < 0 || a.c_target >= classes) {
      e.push_back("attack.c_target: not a valid class");
    }
    if (a.c_src == a.c_target) e.push_back("attack.c_target: must differ from c_src");
  }
  if (a.kind == AttackKind::kBackdoor) {
    try {
      a.backdoor.validate(c.input_dim(), c.num_classes());
    } catch (const ConfigError& ex) {
      e.push_back(std::string("attack: ") + ex.what());
    }
  }

  if (!e.empty()) throw ConfigValidationError(std::move(e));
}

ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& ex) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < ex.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigValidationError({"parse error at line " + std::to_string(line) +
                                 ", column " + std::to_string(col) + ": " +
                                 ex.what()});
  }

  std::vector<std::string> errors;
  Reader r(errors);
  ExperimentConfig c;
  if (!r.object(root, "(root)")) throw ConfigValidationError(std::move(errors));

  r.allow_only(root, "",
               {"format_version", "seed", "dataset", "num_clients", "dirichlet_alpha",
                "model", "t", "c", "epochs", "lr", "batch_size", "genesis_epochs",
                "dp", "defense", "attack", "rounds", "target_accuracy",
                "output_dir", "record_wallclock", "dlg"});
  int version = kConfigFormatVersion;
  r.get(root, "", "format_version", version);
  if (version != kConfigFormatVersion) {
    errors.push_back("format_version: unsupported version " + std::to_string(version));
  }
  r.get(root, "", "seed", c.seed);
  if (root.contains("dataset")) {
    read_dataset(r, root.at("dataset"), base_dir, c.dataset);
  }
  r.get(root, "", "num_clients", c.num_clients);
  r.get(root, "", "dirichlet_alpha", c.dirichlet_alpha);
  if (root.contains("model") && r.object(root.at("model"), "model")) {
    const auto& m = root.at("model");
    r.allow_only(m, "model", {"hidden", "activation"});
    r.list(m, "model", "hidden", c.hidden);
    read_activation(r, m, "model", c.activation);
  }
  auto& hp = c.hyperparams;
  r.get(root, "", "t", hp.t);
  r.get(root, "", "c", hp.c);
  r.get(root, "", "epochs", hp.epochs);
  r.get(root, "", "lr", hp.lr);
  r.get(root, "", "batch_size", hp.batch_size);
  r.get(root, "", "genesis_epochs", c.genesis_epochs);
  if (root.contains("dp") && r.object(root.at("dp"), "dp")) {
    const auto& d = root.at("dp");
    r.allow_only(d, "dp", {"mode", "sigma", "clip_bound", "sparsity"});
    std::string mode = "none";
    r.get(d, "dp", "mode", mode);
    try {
      hp.dp.mode = dp::mode_from_string(mode);
    } catch (const ConfigError&) {
      errors.push_back("dp.mode: unknown mode '" + mode +
                       "' (none, gaussian_noise, value_clip, norm_clip, prune)");
    }
    r.get(d, "dp", "sigma", hp.dp.sigma);
    r.get(d, "dp", "clip_bound", hp.dp.clip_bound);
    r.get(d, "dp", "sparsity", hp.dp.sparsity);
  }
  if (root.contains("defense") && r.object(root.at("defense"), "defense")) {
    const auto& d = root.at("defense");
    auto& p = hp.defense;
    r.allow_only(d, "defense",
                 {"multikrum", "f", "foolsgold", "fg_history_rounds",
                  "fg_confidence", "n_k_cap"});
    r.get(d, "defense", "multikrum", p.use_multikrum);
    r.get(d, "defense", "f", p.f);
    r.get(d, "defense", "foolsgold", p.use_foolsgold);
    r.get(d, "defense", "fg_history_rounds", p.fg_history_rounds);
    r.get(d, "defense", "fg_confidence", p.fg_confidence);
    r.get(d, "defense", "n_k_cap", p.n_k_cap);
  }
  bool pattern_given = false;
  if (root.contains("attack")) read_attack(r, root.at("attack"), c.attack, pattern_given);
  r.get(root, "", "rounds", c.rounds);
  if (root.contains("target_accuracy") && !root.at("target_accuracy").is_null()) {
    double t = 0.0;
    r.get(root, "", "target_accuracy", t);
    c.target_accuracy = t;
  }
  std::string out;
  r.get(root, "", "output_dir", out);
  if (!out.empty()) {
    std::filesystem::path p(out);
    c.output_dir = p.is_absolute() ? p : base_dir / p;
  } else {
    c.output_dir = base_dir / c.output_dir;
  }
  r.get(root, "", "record_wallclock", c.record_wallclock);
  if (root.contains("dlg") && r.object(root.at("dlg"), "dlg")) {
    const auto& d = root.at("dlg");
    r.allow_only(d, "dlg", {"hidden", "activation", "iterations", "history"});
    r.list(d, "dlg", "hidden", c.dlg.hidden);
    read_activation(r, d, "dlg", c.dlg.activation);
    r.get(d, "dlg", "iterations", c.dlg.iterations);
    r.get(d, "dlg", "history", c.dlg.history);
  }

  // Default trigger: the corner pattern at full intensity on image data.
  if (c.attack.kind == AttackKind::kBackdoor && !pattern_given) {
    if (c.dataset.kind == DatasetKind::kMnistIdx) {
      c.attack.backdoor.pattern = attacks::corner_pattern(28);
    } else if (c.dataset.kind == DatasetKind::kSyntheticImages &&
               c.dataset.images.width >= 2) {
      c.attack.backdoor.pattern = attacks::corner_pattern(c.dataset.images.width);
    } else {
      errors.push_back("attack.pattern: required for this dataset (no image width)");
    }
  }

  try {
    validate(c);
  } catch (const ConfigValidationError& ex) {
    errors.insert(errors.end(), ex.errors().begin(), ex.errors().end());
  }
  if (!errors.empty()) throw ConfigValidationError(std::move(errors));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigValidationError({path.string() + ": cannot read config file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string describe(const ExperimentConfig& c) {
  const auto& hp = c.hyperparams;
  json j;
  j["format_version"] = kConfigFormatVersion;
  j["seed"] = c.seed;
  json d;
  d["kind"] = kind_name(c.dataset.kind);
  switch (c.dataset.kind) {
    case DatasetKind::kMnistIdx:
      d["train_images"] = c.dataset.train_images.string();
      d["train_labels"] = c.dataset.train_labels.string();
      d["test_images"] = c.dataset.test_images.string();
      d["test_labels"] = c.dataset.test_labels.string();
      d["train_cap"] = c.dataset.train_cap;
      d["test_cap"] = c.dataset.test_cap;
      break;
    case DatasetKind::kSyntheticBlobs:
      d["n"] = c.dataset.blobs.n;
      d["test_n"] = c.dataset.test_n;
      d["dim"] = c.dataset.blobs.dim;
      d["classes"] = c.dataset.blobs.classes;
      d["separation"] = c.dataset.blobs.separation;
      d["noise"] = c.dataset.blobs.noise;
      break;
    case DatasetKind::kSyntheticImages:
      d["n"] = c.dataset.images.n;
      d["test_n"] = c.dataset.test_n;
      d["height"] = c.dataset.images.height;
      d["width"] = c.dataset.images.width;
      d["classes"] = c.dataset.images.classes;
      d["period"] = c.dataset.images.period;
      d["contrast"] = c.dataset.images.contrast;
      d["noise"] = c.dataset.images.noise;
      break;
  }
  j["dataset"] = d;
  j["num_clients"] = c.num_clients;
  j["dirichlet_alpha"] = c.dirichlet_alpha;
  j["model"] = {{"hidden", c.hidden}, {"activation", nn::to_string(c.activation)}};
  j["t"] = hp.t;
  j["c"] = hp.c;
  j["epochs"] = hp.epochs;
  j["lr"] = hp.lr;
  j["batch_size"] = hp.batch_size;
  j["genesis_epochs"] = c.genesis_epochs;
  j["dp"] = {{"mode", dp::to_string(hp.dp.mode)},
             {"sigma", hp.dp.sigma},
             {"clip_bound", hp.dp.clip_bound},
             {"sparsity", hp.dp.sparsity}};
  j["defense"] = {{"multikrum", hp.defense.use_multikrum},
                  {"f", hp.defense.f},
                  {"foolsgold", hp.defense.use_foolsgold},
                  {"fg_history_rounds", hp.defense.fg_history_rounds},
                  {"fg_confidence", hp.defense.fg_confidence},
                  {"n_k_cap", hp.defense.n_k_cap}};
  json a;
  a["kind"] = kind_name(c.attack.kind);
  if (c.attack.kind != AttackKind::kNone) {
    a["adversaries"] = c.attack.adversaries;
    a["start_round"] = c.attack.start_round;
  }
  if (c.attack.kind == AttackKind::kLabelFlip) {
    a["c_src"] = c.attack.c_src;
    a["c_target"] = c.attack.c_target;
    a["swap"] = c.attack.swap;
  }
  if (c.attack.kind == AttackKind::kBackdoor) {
    const auto& b = c.attack.backdoor;
    json pattern = json::array();
    for (const auto& [px, v] : b.pattern) pattern.push_back({px, v});
    a["pattern"] = pattern;
    a["target_label"] = b.target_label;
    a["poison_fraction"] = b.poison_fraction;
    a["alpha"] = b.alpha;
    a["gamma"] = b.gamma;
    a["lr"] = b.lr;
    a["epochs"] = b.epochs;
    a["step_schedule"] = b.step_schedule;
    a["step_rate"] = b.step_rate;
    a["stop_loss"] = b.stop_loss;
  }
  j["attack"] = a;
  j["rounds"] = c.rounds;
  j["target_accuracy"] = c.target_accuracy ? json(*c.target_accuracy) : json(nullptr);
  j["output_dir"] = c.output_dir.string();
  j["record_wallclock"] = c.record_wallclock;
  j["dlg"] = {{"hidden", c.dlg.hidden},
              {"activation", nn::to_string(c.dlg.activation)},
              {"iterations", c.dlg.iterations},
              {"history", c.dlg.history}};
  return j.dump(2);
}

}  // namespace beas::harness
