#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "irt/response_matrix.hpp"
#include "irt/variational.hpp"

namespace irt {

struct Quartiles {
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

/// Per-dataset distribution of item statistics at the posterior means.
struct DatasetSummary {
  std::string dataset_id;
  Eigen::Index item_count = 0;
  Quartiles leh;
  Quartiles log_alpha;
  Quartiles beta;
  Quartiles gamma;
  /// Fraction of items with gamma below the guessing threshold.
  double gamma_below_fraction = 0.0;
  Eigen::Index unanimous_count = 0;
};

enum class Statistic { Leh, LogAlpha };

struct StabilityReport {
  std::vector<std::string> dataset_ids;
  std::vector<double> values_a;
  std::vector<double> values_b;
  double pearson_r = 0.0;
  double median_abs_diff = 0.0;
  double sd_diff = 0.0;
  /// Datasets whose |a - b| exceeds the caller's threshold.
  std::vector<std::string> exceeding;
};

struct UnanimousItems {
  std::vector<Eigen::Index> all_correct;
  std::vector<Eigen::Index> all_incorrect;

  /// Both lists merged in ascending order.
  std::vector<Eigen::Index> all() const;
};

struct GuessingSplit {
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> filtered;
  double kept_fraction = 0.0;
};

struct AbilityAccuracy {
  Eigen::Index responder = 0;
  double theta = 0.0;
  double accuracy = 0.0;
};

/// LEH of every item at the fit's strongest ability.
std::vector<double> item_leh(const FitResult& fit);

/// Throws ConfigError when the fit and data disagree on shape.
void check_fit_matches(const FitResult& fit, const ResponseMatrix& data);

/// One summary per dataset in data.dataset_ids() order.
std::vector<DatasetSummary> dataset_summaries(const FitResult& fit, const ResponseMatrix& data,
                                              double gamma_threshold = 0.5);

/// The p-th percentile of a per-item statistic within each dataset.
std::vector<double> dataset_percentiles(const FitResult& fit, const ResponseMatrix& data,
                                        Statistic statistic, double p);

UnanimousItems unanimous_items(const ResponseMatrix& data);

/// Pairs per-dataset percentiles of two fits by dataset id. `data_a` and
/// `data_b` are the matrices each fit was trained on. Throws ConfigError
/// if the dataset sets differ.
StabilityReport stability_check(const FitResult& fit_a, const ResponseMatrix& data_a,
                                const FitResult& fit_b, const ResponseMatrix& data_b,
                                Statistic statistic, double p, double threshold);

/// Splits items by posterior-mean gamma < threshold. Throws ConfigError
/// unless 0 < threshold < 1.
GuessingSplit guessing_filter(const FitResult& fit, double threshold);

/// (posterior-mean theta, fraction correct) per responder, by descending theta.
std::vector<AbilityAccuracy> ability_accuracy_pairs(const FitResult& fit,
                                                    const ResponseMatrix& data);

/// Indices of the k responders with the largest posterior-mean theta.
std::vector<Eigen::Index> top_k_responders(const FitResult& fit, Eigen::Index k);

}  // namespace irt
