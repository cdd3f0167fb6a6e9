#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace irt {

/// Responders x items matrix of 0/1 outcomes. Column-major so each item's
/// responses are contiguous.
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Complete binary response matrix with item-to-dataset membership.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  /// `dataset_of[j]` indexes into `dataset_ids`. Throws InputError if the
  /// shapes disagree, m < 2, n < 1, or an entry is not 0/1.
  ResponseMatrix(BinaryMatrix responses, std::vector<std::string> responder_ids,
                 std::vector<std::string> item_ids, std::vector<std::string> dataset_ids,
                 std::vector<int> dataset_of);

  Eigen::Index n_responders() const { return responses_.rows(); }
  Eigen::Index n_items() const { return responses_.cols(); }
  Eigen::Index n_datasets() const { return static_cast<Eigen::Index>(dataset_ids_.size()); }

  const BinaryMatrix& responses() const { return responses_; }
  bool correct(Eigen::Index responder, Eigen::Index item) const {
    return responses_(responder, item) != 0;
  }

  const std::vector<std::string>& responder_ids() const { return responder_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<std::string>& dataset_ids() const { return dataset_ids_; }
  const std::vector<int>& dataset_of() const { return dataset_of_; }

  /// Number of items in each dataset.
  const std::vector<Eigen::Index>& dataset_sizes() const { return dataset_sizes_; }

  /// scale / (size of each item's dataset).
  Eigen::VectorXd item_weights(double scale = 1.0) const;

  /// Copy with the given responders / items dropped. Datasets left without
  /// items are removed.
  ResponseMatrix without_responders(const std::vector<Eigen::Index>& responders) const;
  ResponseMatrix without_items(const std::vector<Eigen::Index>& items) const;

  friend bool operator==(const ResponseMatrix& a, const ResponseMatrix& b);

 private:
  BinaryMatrix responses_;
  std::vector<std::string> responder_ids_;
  std::vector<std::string> item_ids_;
  std::vector<std::string> dataset_ids_;
  std::vector<int> dataset_of_;
  std::vector<Eigen::Index> dataset_sizes_;
};

}  // namespace irt
