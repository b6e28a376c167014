#include "beas/nn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beas/error.hpp"

namespace beas::nn {

Dataset::Dataset(std::size_t input_dim, std::size_t num_classes,
                 std::vector<double> features, std::vector<int> labels)
    : input_dim_(input_dim),
      num_classes_(num_classes),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (input_dim_ == 0 || num_classes_ == 0) {
    throw InvalidInput("dataset needs input_dim >= 1 and num_classes >= 1");
  }
  if (features_.size() != labels_.size() * input_dim_) {
    throw InvalidInput("dataset feature block has " +
                       std::to_string(features_.size()) + " values, expected " +
                       std::to_string(labels_.size() * input_dim_));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_) {
      throw InvalidInput("label " + std::to_string(labels_[i]) + " at row " +
                         std::to_string(i) + " outside [0, " +
                         std::to_string(num_classes_) + ")");
    }
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw InvalidInput("dataset has non-finite feature");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> f;
  f.reserve(indices.size() * input_dim_);
  std::vector<int> l;
  l.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw InvalidInput("subset index out of range");
    auto r = row(i);
    f.insert(f.end(), r.begin(), r.end());
    l.push_back(labels_[i]);
  }
  return {input_dim_, num_classes_, std::move(f), std::move(l)};
}

Dataset Dataset::with_labels(std::vector<int> labels) const {
  return {input_dim_, num_classes_, features_, std::move(labels)};
}

Dataset Dataset::with_features(std::vector<double> features) const {
  return {input_dim_, num_classes_, std::move(features), labels_};
}

Dataset Dataset::concat(const Dataset& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  if (other.input_dim_ != input_dim_ || other.num_classes_ != num_classes_) {
    throw InvalidInput("cannot concatenate datasets of different shape");
  }
  std::vector<double> f(features_);
  f.insert(f.end(), other.features_.begin(), other.features_.end());
  std::vector<int> l(labels_);
  l.insert(l.end(), other.labels_.begin(), other.labels_.end());
  return {input_dim_, num_classes_, std::move(f), std::move(l)};
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (int l : labels_) ++counts[static_cast<std::size_t>(l)];
  return counts;
}

std::vector<Batch> Dataset::batches(std::size_t batch_size) const {
  if (batch_size == 0) throw InvalidInput("batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, size() - start);
    Batch b;
    b.inputs = Eigen::Map<const RowMatrix>(
        features_.data() + start * input_dim_, static_cast<Eigen::Index>(n),
        static_cast<Eigen::Index>(input_dim_));
    b.labels.assign(labels_.begin() + static_cast<std::ptrdiff_t>(start),
                    labels_.begin() + static_cast<std::ptrdiff_t>(start + n));
    out.push_back(std::move(b));
  }
  return out;
}

Batch Dataset::as_batch() const {
  Batch b;
  b.inputs = Eigen::Map<const RowMatrix>(features_.data(),
                                         static_cast<Eigen::Index>(size()),
                                         static_cast<Eigen::Index>(input_dim_));
  b.labels = labels_;
  return b;
}

}  // namespace beas::nn
