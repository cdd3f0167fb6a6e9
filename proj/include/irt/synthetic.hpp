#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "irt/model.hpp"
#include "irt/response_matrix.hpp"
#include "irt/variational.hpp"

namespace irt {

/// Normal(mean, sd) or a fixed value.
struct Sampler {
  enum class Kind { Normal, Fixed };
  Kind kind = Kind::Normal;
  double mean = 0.0;
  double sd = 1.0;

  static Sampler normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
  static Sampler fixed(double value) { return {Kind::Fixed, value, 0.0}; }

  double draw(std::mt19937_64& rng) const;
};

struct DatasetSpec {
  std::string id;
  Eigen::Index items = 0;
  /// Overrides GeneratorSpec::beta for this dataset's items.
  std::optional<Sampler> beta;
};

struct GeneratorSpec {
  Eigen::Index responders = 0;
  std::vector<DatasetSpec> datasets;
  Sampler theta = Sampler::normal(0.0, 1.0);
  Sampler beta = Sampler::normal(0.0, 1.0);
  Sampler log_alpha = Sampler::normal(0.0, 0.4);
  Sampler logit_gamma = Sampler::normal(0.0, 1.0);
  std::uint64_t seed = 0;

  /// Throws ConfigError on zero counts or non-positive sd.
  void validate() const;
};

struct GroundTruth {
  Eigen::VectorXd thetas;
  std::vector<ItemParameters> items;
  std::vector<std::string> responder_ids;
  std::vector<std::string> item_ids;
  std::vector<std::string> dataset_ids;
  std::vector<int> dataset_of;

  Eigen::Index n_items() const { return static_cast<Eigen::Index>(items.size()); }
};

/// The acceptance fixture: 90 responders, six datasets of sizes
/// 50..2000 items (3850 total), theta ~ N(0, 1.5^2), log alpha ~ N(0, 0.4^2),
/// logit gamma ~ N(-2,1), and a distinct beta location per dataset.
GeneratorSpec canonical_fixture_spec(std::uint64_t seed = 20211);

GroundTruth sample_truth(const GeneratorSpec& spec);

/// Bernoulli(icc_prob) draw for every responder x item cell.
ResponseMatrix simulate_responses(const GroundTruth& truth, std::uint64_t seed);

struct DatasetRecovery {
  std::string dataset_id;
  double true_leh_p75 = 0.0;
  double fit_leh_p75 = 0.0;
};

struct RecoveryReport {
  double pearson_theta = 0.0;
  double spearman_theta = 0.0;
  double pearson_beta = 0.0;
  double pearson_log_alpha = 0.0;
  double pearson_leh = 0.0;
  double mae_theta = 0.0;
  double mae_beta = 0.0;
  double mae_log_alpha = 0.0;
  double mae_leh = 0.0;
  std::vector<DatasetRecovery> datasets;
  /// Datasets whose position in the descending p75-LEH order agrees.
  int leh_rank_matches = 0;
};

/// Compares ground truth with posterior means. LEH on the truth side uses
/// the largest true theta; on the fit side the fit's theta_star.
RecoveryReport recovery_metrics(const GroundTruth& truth, const FitResult& fit);

}  // namespace irt
