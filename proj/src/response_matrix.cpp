#include "irt/response_matrix.hpp"

#include <algorithm>

#include "irt/error.hpp"

namespace irt {

ResponseMatrix::ResponseMatrix(BinaryMatrix responses, std::vector<std::string> responder_ids,
                               std::vector<std::string> item_ids,
                               std::vector<std::string> dataset_ids, std::vector<int> dataset_of)
    : responses_(std::move(responses)),
      responder_ids_(std::move(responder_ids)),
      item_ids_(std::move(item_ids)),
      dataset_ids_(std::move(dataset_ids)),
      dataset_of_(std::move(dataset_of)) {
  if (responses_.rows() < 2) {
    throw InputError("response matrix needs at least 2 responders, got " +
                     std::to_string(responses_.rows()));
  }
  if (responses_.cols() < 1) {
    throw InputError("response matrix needs at least 1 item");
  }
  if (static_cast<Eigen::Index>(responder_ids_.size()) != responses_.rows() ||
      static_cast<Eigen::Index>(item_ids_.size()) != responses_.cols() ||
      static_cast<Eigen::Index>(dataset_of_.size()) != responses_.cols()) {
    throw InputError("response matrix labels do not match its shape");
  }
  if ((responses_.array() > std::uint8_t{1}).any()) {
    throw InputError("response matrix entries must be 0 or 1");
  }
  dataset_sizes_.assign(dataset_ids_.size(), 0);
  for (int d : dataset_of_) {
    if (d < 0 || d >= static_cast<int>(dataset_ids_.size())) {
      throw InputError("item refers to unknown dataset index " + std::to_string(d));
    }
    ++dataset_sizes_[static_cast<std::size_t>(d)];
  }
}

Eigen::VectorXd ResponseMatrix::item_weights(double scale) const {
  Eigen::VectorXd w(n_items());
  for (Eigen::Index j = 0; j < n_items(); ++j) {
    w[j] = scale / static_cast<double>(dataset_sizes_[static_cast<std::size_t>(dataset_of_[j])]);
  }
  return w;
}

ResponseMatrix ResponseMatrix::without_responders(const std::vector<Eigen::Index>& responders) const {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n_responders(); ++i) {
    if (std::find(responders.begin(), responders.end(), i) == responders.end()) keep.push_back(i);
  }
  BinaryMatrix r(static_cast<Eigen::Index>(keep.size()), n_items());
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    r.row(static_cast<Eigen::Index>(k)) = responses_.row(keep[k]);
    ids.push_back(responder_ids_[static_cast<std::size_t>(keep[k])]);
  }
  return {std::move(r), std::move(ids), item_ids_, dataset_ids_, dataset_of_};
}

ResponseMatrix ResponseMatrix::without_items(const std::vector<Eigen::Index>& items) const {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < n_items(); ++j) {
    if (std::find(items.begin(), items.end(), j) == items.end()) keep.push_back(j);
  }
  std::vector<int> remap(dataset_ids_.size(), -1);
  std::vector<std::string> datasets;
  std::vector<int> dataset_of;
  std::vector<std::string> ids;
  BinaryMatrix r(n_responders(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto j = keep[k];
    const auto old = static_cast<std::size_t>(dataset_of_[static_cast<std::size_t>(j)]);
    if (remap[old] < 0) {
      remap[old] = static_cast<int>(datasets.size());
      datasets.push_back(dataset_ids_[old]);
    }
    r.col(static_cast<Eigen::Index>(k)) = responses_.col(j);
    ids.push_back(item_ids_[static_cast<std::size_t>(j)]);
    dataset_of.push_back(remap[old]);
  }
  // Keep surviving datasets in their original order.
  std::vector<int> order(dataset_ids_.size(), -1);
  std::vector<std::string> ordered;
  for (std::size_t d = 0; d < dataset_ids_.size(); ++d) {
    if (remap[d] >= 0) {
      order[static_cast<std::size_t>(remap[d])] = static_cast<int>(ordered.size());
      ordered.push_back(dataset_ids_[d]);
    }
  }
  for (int& d : dataset_of) d = order[static_cast<std::size_t>(d)];
  return {std::move(r), responder_ids_, std::move(ids), std::move(ordered), std::move(dataset_of)};
}

bool operator==(const ResponseMatrix& a, const ResponseMatrix& b) {
  if (a.responses_.rows() != b.responses_.rows() || a.responses_.cols() != b.responses_.cols()) {
    return false;
  }
  return a.responses_ == b.responses_ && a.responder_ids_ == b.responder_ids_ &&
         a.item_ids_ == b.item_ids_ && a.dataset_ids_ == b.dataset_ids_ &&
         a.dataset_of_ == b.dataset_of_;
}

}  // namespace irt
