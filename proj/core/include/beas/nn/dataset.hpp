#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace beas::nn {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One mini-batch: a (batch_size x input_dim) matrix and class-index labels.
struct Batch {
  RowMatrix inputs;
  std::vector<int> labels;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

// Labelled examples stored as a dense row-major feature block.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t input_dim, std::size_t num_classes,
          std::vector<double> features, std::vector<int> labels);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * input_dim_, input_dim_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const { return labels_; }
  std::span<const double> features() const { return features_; }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset with_labels(std::vector<int> labels) const;
  Dataset with_features(std::vector<double> features) const;
  // Rows of this followed by rows of other.
  Dataset concat(const Dataset& other) const;

  std::vector<std::size_t> class_counts() const;

  // Consecutive mini-batches in row order; the last one may be short.
  std::vector<Batch> batches(std::size_t batch_size) const;
  Batch as_batch() const;

 private:
  std::size_t input_dim_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
};

}  // namespace beas::nn
