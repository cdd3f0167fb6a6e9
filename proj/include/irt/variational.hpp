#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "irt/model.hpp"
#include "irt/response_matrix.hpp"

namespace irt {

/// Mean-field Gaussian factor, parameterised by mean and log standard deviation.
struct GaussianVariational {
  double mu = 0.0;
  double log_sigma = 0.0;

  double sigma() const { return std::exp(log_sigma); }
};

/// A vector of independent Gaussian factors.
struct GaussianBlock {
  Eigen::VectorXd mu;
  Eigen::VectorXd log_sigma;

  GaussianBlock() = default;
  GaussianBlock(Eigen::Index size, double mu0, double log_sigma0)
      : mu(Eigen::VectorXd::Constant(size, mu0)),
        log_sigma(Eigen::VectorXd::Constant(size, log_sigma0)) {}

  Eigen::Index size() const { return mu.size(); }
  GaussianVariational operator[](Eigen::Index k) const { return {mu[k], log_sigma[k]}; }
  bool all_finite() const { return mu.allFinite() && log_sigma.allFinite(); }
};

/// Factorised variational posterior q(theta) q(log alpha) q(beta) q(logit gamma).
/// The same layout doubles as the container for ELBO gradients.
struct PosteriorSet {
  GaussianBlock theta;
  GaussianBlock log_alpha;
  GaussianBlock beta;
  GaussianBlock logit_gamma;

  PosteriorSet() = default;
  PosteriorSet(Eigen::Index n_responders, Eigen::Index n_items, double mu0 = 0.0,
               double log_sigma0 = 0.0);

  /// All means 0 and all standard deviations 0.1.
  static PosteriorSet initial(Eigen::Index n_responders, Eigen::Index n_items);

  Eigen::Index n_responders() const { return theta.size(); }
  Eigen::Index n_items() const { return beta.size(); }
  Eigen::Index n_params() const { return 2 * (n_responders() + 3 * n_items()); }

  /// Packs as [theta.mu, theta.log_sigma, log_alpha.mu, ..., logit_gamma.log_sigma].
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat);

  bool all_finite() const;

  /// Posterior means pushed through the constraint transforms.
  ItemParameters point_item(Eigen::Index j) const;
};

/// Prior: N(0,1) on theta, beta and logit gamma; N(0, log_alpha_sigma^2) on log alpha.
struct PriorConfig {
  double log_alpha_sigma = 0.4;
};

/// Adam settings and Monte Carlo sizes for a fit.
struct FitConfig {
  int steps = 2000;
  double learning_rate = 0.05;
  int mc_samples = 4;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Samples used for the reported final ELBO estimate.
  int eval_samples = 32;
  /// Numerator of the inverse-dataset-size likelihood weights; <= 0 selects
  /// n_items / n_datasets.
  double weight_scale = 0.0;
};

/// Standard-normal noise for every latent, one column per Monte Carlo sample.
struct NoiseDraw {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd log_alpha;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd logit_gamma;

  int samples() const { return static_cast<int>(theta.cols()); }

  static NoiseDraw sample(Eigen::Index n_responders, Eigen::Index n_items, int mc_samples,
                          std::mt19937_64& rng);
  static NoiseDraw sample(Eigen::Index n_responders, Eigen::Index n_items, int mc_samples,
                          std::uint64_t seed);
};

/// Parts of a Monte Carlo ELBO estimate.
struct ElboTerms {
  /// Weighted expected log-likelihood, summed over all datasets.
  double loglik = 0.0;
  /// Weighted expected log-likelihood per dataset, in data.dataset_ids() order.
  Eigen::VectorXd loglik_by_dataset;
  /// Sum of closed-form KL divergences to the prior.
  double kl = 0.0;

  double value() const { return loglik - kl; }
};

/// Value and gradient of the ELBO with respect to every (mu, log_sigma).
struct ElboGradient {
  double value = 0.0;
  PosteriorSet grad;
};

struct FitResult {
  PosteriorSet posterior;
  double final_elbo = 0.0;
  std::vector<double> elbo_trace;
  FitConfig config;
  PriorConfig prior;
  bool degenerate = false;
  double theta_star = 0.0;
  std::vector<ItemParameters> point_items;
};

/// alpha = exp(raw_log_alpha), beta = raw_beta, gamma = sigmoid(raw_logit_gamma).
ItemParameters constrain(double raw_log_alpha, double raw_beta, double raw_logit_gamma);

/// KL(q || N(prior_mu, prior_sigma^2)).
double kl_gaussian(const GaussianVariational& q, double prior_mu, double prior_sigma);

/// Total KL of the posterior to the prior.
double kl_total(const PosteriorSet& posterior, const PriorConfig& prior);

/// Gradient of kl_total with respect to every (mu, log_sigma).
PosteriorSet kl_gradient(const PosteriorSet& posterior, const PriorConfig& prior);

/// Monte Carlo ELBO. The log-likelihood of every response to item j is
/// weighted by weight_scale / |dataset of j|; KL terms are unweighted.
/// Throws ConfigError when posterior, data and noise dimensions disagree.
ElboTerms elbo_terms(const PosteriorSet& posterior, const ResponseMatrix& data,
                     const PriorConfig& prior, const NoiseDraw& noise, double weight_scale = 1.0);

double elbo(const PosteriorSet& posterior, const ResponseMatrix& data, const PriorConfig& prior,
            const NoiseDraw& noise, double weight_scale = 1.0);
double elbo(const PosteriorSet& posterior, const ResponseMatrix& data, const PriorConfig& prior,
            int mc_samples, std::uint64_t seed, double weight_scale = 1.0);

/// Reparameterised pathwise gradient of elbo() for the same noise draw.
ElboGradient elbo_gradient(const PosteriorSet& posterior, const ResponseMatrix& data,
                           const PriorConfig& prior, const NoiseDraw& noise,
                           double weight_scale = 1.0);
ElboGradient elbo_gradient(const PosteriorSet& posterior, const ResponseMatrix& data,
                           const PriorConfig& prior, int mc_samples, std::uint64_t seed,
                           double weight_scale = 1.0);

/// config.weight_scale when positive, otherwise n_items / n_datasets, which
/// makes the weights average to one.
double resolve_weight_scale(const FitConfig& config, const ResponseMatrix& data);

/// Runs config.steps Adam ascent steps on the ELBO starting from PosteriorSet::initial.
/// A non-finite ELBO or gradient stops the run early and marks it degenerate.
FitResult fit(const ResponseMatrix& data, const PriorConfig& prior, const FitConfig& config);

/// Divergence, non-learning, or discrimination collapse.
bool is_degenerate(const FitResult& result);

inline constexpr std::array<double, 6> kSigmaAlphaGrid = {0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
inline constexpr std::uint64_t kSweepSeedStride = 10007;

struct SweepRun {
  double sigma_alpha = 0.0;
  std::uint64_t seed = 0;
  double final_elbo = 0.0;
  bool degenerate = false;
};

struct SweepResult {
  double chosen_sigma = 0.0;
  FitResult best;
  std::vector<SweepRun> runs;
};

using FitRunner =
    std::function<FitResult(const ResponseMatrix&, const PriorConfig&, const FitConfig&)>;

/// Fits once per grid value of the log-alpha prior scale and keeps the
/// highest-ELBO non-degenerate run. Throws NoValidRunError if none survive.
SweepResult sweep_sigma_alpha(const ResponseMatrix& data, const FitConfig& config,
                              const FitRunner& runner = fit);

}  // namespace irt
