#include "irt/variational.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "irt/error.hpp"

namespace irt {

namespace {

constexpr double kInitialLogSigma = -2.302585092994046;  // ln 0.1

void check_dims(const PosteriorSet& posterior, const ResponseMatrix& data, const NoiseDraw& noise) {
  const auto m = data.n_responders();
  const auto n = data.n_items();
  if (posterior.n_responders() != m || posterior.n_items() != n ||
      posterior.log_alpha.size() != n || posterior.logit_gamma.size() != n) {
    throw ConfigError("posterior shape (" + std::to_string(posterior.n_responders()) + " x " +
                      std::to_string(posterior.n_items()) + ") does not match data (" +
                      std::to_string(m) + " x " + std::to_string(n) + ")");
  }
  if (noise.samples() < 1 || noise.theta.rows() != m || noise.log_alpha.rows() != n ||
      noise.beta.rows() != n || noise.logit_gamma.rows() != n ||
      noise.log_alpha.cols() != noise.samples() || noise.beta.cols() != noise.samples() ||
      noise.logit_gamma.cols() != noise.samples()) {
    throw ConfigError("noise draw shape does not match data");
  }
}

struct SampleGrad {
  Eigen::VectorXd theta;
  Eigen::VectorXd log_alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd logit_gamma;
};

// Responses as 0/1 doubles plus the +-1 sign of d(prob of observed)/d(prob correct).
struct Observed {
  Eigen::ArrayXXd y;
  Eigen::ArrayXXd sign;

  explicit Observed(const ResponseMatrix& data)
      : y(data.responses().cast<double>().array()), sign(2.0 * y - 1.0) {}
};

// Per-column scratch buffers reused across items.
struct ColumnScratch {
  Eigen::ArrayXd z, e, s, t, r, dz;

  explicit ColumnScratch(Eigen::Index m) : z(m), e(m), s(m), t(m), r(m), dz(m) {}
};

// Weighted log-likelihood of every response at one set of sampled latents.
// With `grad` set, also writes d/d(latent) into it.
template <bool WithGrad>
double sample_loglik(const ResponseMatrix& data, const Observed& obs,
                     const Eigen::VectorXd& weights, const Eigen::VectorXd& theta,
                     const Eigen::VectorXd& log_alpha, const Eigen::VectorXd& beta,
                     const Eigen::VectorXd& logit_gamma, Eigen::VectorXd& by_dataset,
                     ColumnScratch& c, SampleGrad* grad) {
  const auto n = data.n_items();
  const auto& dataset_of = data.dataset_of();
  const double lo = kProbClamp;
  const double hi = 1.0 - kProbClamp;
  const auto th = theta.array();
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double alpha = std::exp(log_alpha[j]);
    const double gamma = sigmoid(logit_gamma[j]);
    const double one_m_gamma = 1.0 - gamma;
    const auto y = obs.y.col(j);
    const auto sign = obs.sign.col(j);

    c.z = alpha * (th - beta[j]);
    c.e = (-c.z.abs()).exp();
    c.r = 1.0 / (1.0 + c.e);
    c.s = (c.z >= 0.0).select(c.r, c.e * c.r);  // sigmoid(z)
    c.t = (c.z >= 0.0).select(c.e * c.r, c.r);  // sigmoid(-z)
    // Probability of the observed outcome: gamma + (1-gamma)s if correct, (1-gamma)t if not.
    c.r = y * (gamma + one_m_gamma * c.s) + (1.0 - y) * (one_m_gamma * c.t);
    const double item_ll = c.r.max(lo).min(hi).log().sum();

    const double w = weights[j];
    total += w * item_ll;
    by_dataset[dataset_of[static_cast<std::size_t>(j)]] += w * item_ll;
    if constexpr (WithGrad) {
      const auto free = (c.r >= lo && c.r <= hi);
      // d log r / dz, zero where the clamp is active.
      c.dz = free.select(sign * one_m_gamma * c.s * c.t / c.r, 0.0);
      // d log r / d gamma reuses the e buffer.
      c.e = free.select(sign * c.t / c.r, 0.0);
      grad->theta.array() += (w * alpha) * c.dz;
      grad->beta[j] = -w * alpha * c.dz.sum();
      grad->log_alpha[j] = w * (c.dz * c.z).sum();
      grad->logit_gamma[j] = w * c.e.sum() * gamma * one_m_gamma;
    }
  }
  return total;
}

template <bool WithGrad>
ElboTerms evaluate(const PosteriorSet& q, const ResponseMatrix& data, const PriorConfig& prior,
                   const NoiseDraw& noise, double weight_scale, PosteriorSet* grad) {
  check_dims(q, data, noise);
  const auto m = data.n_responders();
  const auto n = data.n_items();
  const Eigen::VectorXd weights = data.item_weights(weight_scale);
  const Eigen::VectorXd sd_theta = q.theta.log_sigma.array().exp();
  const Eigen::VectorXd sd_alpha = q.log_alpha.log_sigma.array().exp();
  const Eigen::VectorXd sd_beta = q.beta.log_sigma.array().exp();
  const Eigen::VectorXd sd_gamma = q.logit_gamma.log_sigma.array().exp();
  const int samples = noise.samples();
  const double scale = 1.0 / samples;

  ElboTerms terms;
  terms.loglik_by_dataset = Eigen::VectorXd::Zero(data.n_datasets());
  if constexpr (WithGrad) {
    *grad = kl_gradient(q, prior);
    grad->theta.mu = -grad->theta.mu;
    grad->theta.log_sigma = -grad->theta.log_sigma;
    grad->log_alpha.mu = -grad->log_alpha.mu;
    grad->log_alpha.log_sigma = -grad->log_alpha.log_sigma;
    grad->beta.mu = -grad->beta.mu;
    grad->beta.log_sigma = -grad->beta.log_sigma;
    grad->logit_gamma.mu = -grad->logit_gamma.mu;
    grad->logit_gamma.log_sigma = -grad->logit_gamma.log_sigma;
  }

  SampleGrad sg;
  if constexpr (WithGrad) {
    sg.theta.resize(m);
    sg.log_alpha.resize(n);
    sg.beta.resize(n);
    sg.logit_gamma.resize(n);
  }
  Eigen::VectorXd by_dataset(data.n_datasets());
  const Observed obs(data);
  ColumnScratch scratch(m);
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd theta = q.theta.mu + sd_theta.cwiseProduct(noise.theta.col(s));
    const Eigen::VectorXd log_alpha = q.log_alpha.mu + sd_alpha.cwiseProduct(noise.log_alpha.col(s));
    const Eigen::VectorXd beta = q.beta.mu + sd_beta.cwiseProduct(noise.beta.col(s));
    const Eigen::VectorXd logit_gamma =
        q.logit_gamma.mu + sd_gamma.cwiseProduct(noise.logit_gamma.col(s));
    by_dataset.setZero();
    if constexpr (WithGrad) sg.theta.setZero();
    terms.loglik += scale * sample_loglik<WithGrad>(data, obs, weights, theta, log_alpha, beta,
                                                    logit_gamma, by_dataset, scratch,
                                                    WithGrad ? &sg : nullptr);
    terms.loglik_by_dataset += scale * by_dataset;
    if constexpr (WithGrad) {
      // x = mu + sigma * eps, so dx/dmu = 1 and dx/dlog_sigma = sigma * eps.
      auto chain = [&](GaussianBlock& g, const Eigen::VectorXd& dx, const Eigen::VectorXd& sd,
                       const auto& eps) {
        g.mu += scale * dx;
        g.log_sigma += scale * dx.cwiseProduct(sd).cwiseProduct(eps);
      };
      chain(grad->theta, sg.theta, sd_theta, noise.theta.col(s));
      chain(grad->log_alpha, sg.log_alpha, sd_alpha, noise.log_alpha.col(s));
      chain(grad->beta, sg.beta, sd_beta, noise.beta.col(s));
      chain(grad->logit_gamma, sg.logit_gamma, sd_gamma, noise.logit_gamma.col(s));
    }
  }
  terms.kl = kl_total(q, prior);
  return terms;
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

void validate(const FitConfig& config, const PriorConfig& prior) {
  if (config.steps < 1) throw ConfigError("steps must be >= 1");
  if (config.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (config.eval_samples < 1) throw ConfigError("eval_samples must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(prior.log_alpha_sigma > 0.0)) throw ConfigError("log-alpha prior scale must be positive");
}

}  // namespace

PosteriorSet::PosteriorSet(Eigen::Index n_responders, Eigen::Index n_items, double mu0,
                           double log_sigma0)
    : theta(n_responders, mu0, log_sigma0),
      log_alpha(n_items, mu0, log_sigma0),
      beta(n_items, mu0, log_sigma0),
      logit_gamma(n_items, mu0, log_sigma0) {}

PosteriorSet PosteriorSet::initial(Eigen::Index n_responders, Eigen::Index n_items) {
  return PosteriorSet(n_responders, n_items, 0.0, kInitialLogSigma);
}

Eigen::VectorXd PosteriorSet::flatten() const {
  Eigen::VectorXd flat(n_params());
  Eigen::Index at = 0;
  for (const GaussianBlock* b : {&theta, &log_alpha, &beta, &logit_gamma}) {
    flat.segment(at, b->size()) = b->mu;
    at += b->size();
    flat.segment(at, b->size()) = b->log_sigma;
    at += b->size();
  }
  return flat;
}

void PosteriorSet::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != n_params()) throw ConfigError("flat parameter vector has wrong size");
  Eigen::Index at = 0;
  for (GaussianBlock* b : {&theta, &log_alpha, &beta, &logit_gamma}) {
    b->mu = flat.segment(at, b->size());
    at += b->size();
    b->log_sigma = flat.segment(at, b->size());
    at += b->size();
  }
}

bool PosteriorSet::all_finite() const {
  return theta.all_finite() && log_alpha.all_finite() && beta.all_finite() &&
         logit_gamma.all_finite();
}

ItemParameters PosteriorSet::point_item(Eigen::Index j) const {
  return constrain(log_alpha.mu[j], beta.mu[j], logit_gamma.mu[j]);
}

NoiseDraw NoiseDraw::sample(Eigen::Index n_responders, Eigen::Index n_items, int mc_samples,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Eigen::Index rows) {
    Eigen::MatrixXd m(rows, mc_samples);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = normal(rng);
    return m;
  };
  NoiseDraw draw;
  draw.theta = fill(n_responders);
  draw.log_alpha = fill(n_items);
  draw.beta = fill(n_items);
  draw.logit_gamma = fill(n_items);
  return draw;
}

NoiseDraw NoiseDraw::sample(Eigen::Index n_responders, Eigen::Index n_items, int mc_samples,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample(n_responders, n_items, mc_samples, rng);
}

ItemParameters constrain(double raw_log_alpha, double raw_beta, double raw_logit_gamma) {
  return {std::exp(raw_log_alpha), raw_beta, sigmoid(raw_logit_gamma)};
}

double kl_gaussian(const GaussianVariational& q, double prior_mu, double prior_sigma) {
  const double var_ratio = std::exp(2.0 * q.log_sigma) / (prior_sigma * prior_sigma);
  const double d = (q.mu - prior_mu) / prior_sigma;
  return std::log(prior_sigma) - q.log_sigma + 0.5 * (var_ratio + d * d) - 0.5;
}

namespace {

double block_kl(const GaussianBlock& b, double prior_sigma) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < b.size(); ++k) total += kl_gaussian(b[k], 0.0, prior_sigma);
  return total;
}

void block_kl_grad(const GaussianBlock& b, double prior_sigma, GaussianBlock& out) {
  const double inv_var = 1.0 / (prior_sigma * prior_sigma);
  out.mu = b.mu * inv_var;
  out.log_sigma = ((2.0 * b.log_sigma).array().exp() * inv_var - 1.0).matrix();
}

}  // namespace

double kl_total(const PosteriorSet& posterior, const PriorConfig& prior) {
  return block_kl(posterior.theta, 1.0) + block_kl(posterior.log_alpha, prior.log_alpha_sigma) +
         block_kl(posterior.beta, 1.0) + block_kl(posterior.logit_gamma, 1.0);
}

PosteriorSet kl_gradient(const PosteriorSet& posterior, const PriorConfig& prior) {
  PosteriorSet g;
  block_kl_grad(posterior.theta, 1.0, g.theta);
  block_kl_grad(posterior.log_alpha, prior.log_alpha_sigma, g.log_alpha);
  block_kl_grad(posterior.beta, 1.0, g.beta);
  block_kl_grad(posterior.logit_gamma, 1.0, g.logit_gamma);
  return g;
}

ElboTerms elbo_terms(const PosteriorSet& posterior, const ResponseMatrix& data,
                     const PriorConfig& prior, const NoiseDraw& noise, double weight_scale) {
  return evaluate<false>(posterior, data, prior, noise, weight_scale, nullptr);
}

double elbo(const PosteriorSet& posterior, const ResponseMatrix& data, const PriorConfig& prior,
            const NoiseDraw& noise, double weight_scale) {
  return elbo_terms(posterior, data, prior, noise, weight_scale).value();
}

double elbo(const PosteriorSet& posterior, const ResponseMatrix& data, const PriorConfig& prior,
            int mc_samples, std::uint64_t seed, double weight_scale) {
  return elbo(posterior, data, prior,
              NoiseDraw::sample(data.n_responders(), data.n_items(), mc_samples, seed),
              weight_scale);
}

ElboGradient elbo_gradient(const PosteriorSet& posterior, const ResponseMatrix& data,
                           const PriorConfig& prior, const NoiseDraw& noise, double weight_scale) {
  ElboGradient out;
  out.value = evaluate<true>(posterior, data, prior, noise, weight_scale, &out.grad).value();
  return out;
}

ElboGradient elbo_gradient(const PosteriorSet& posterior, const ResponseMatrix& data,
                           const PriorConfig& prior, int mc_samples, std::uint64_t seed,
                           double weight_scale) {
  return elbo_gradient(posterior, data, prior,
                       NoiseDraw::sample(data.n_responders(), data.n_items(), mc_samples, seed),
                       weight_scale);
}

double resolve_weight_scale(const FitConfig& config, const ResponseMatrix& data) {
  if (config.weight_scale > 0.0) return config.weight_scale;
  return static_cast<double>(data.n_items()) / static_cast<double>(data.n_datasets());
}

FitResult fit(const ResponseMatrix& data, const PriorConfig& prior, const FitConfig& config) {
  validate(config, prior);
  const auto m = data.n_responders();
  const auto n = data.n_items();

  FitResult result;
  result.config = config;
  result.prior = prior;
  result.posterior = PosteriorSet::initial(m, n);
  result.elbo_trace.reserve(static_cast<std::size_t>(config.steps));

  const double weight_scale = resolve_weight_scale(config, data);
  std::mt19937_64 rng(config.seed);
  Eigen::VectorXd params = result.posterior.flatten();
  Eigen::VectorXd first = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd second = Eigen::VectorXd::Zero(params.size());
  double b1_pow = 1.0;
  double b2_pow = 1.0;
  bool diverged = false;

  for (int step = 0; step < config.steps; ++step) {
    const NoiseDraw noise = NoiseDraw::sample(m, n, config.mc_samples, rng);
    const ElboGradient eg = elbo_gradient(result.posterior, data, prior, noise, weight_scale);
    result.elbo_trace.push_back(eg.value);
    const Eigen::VectorXd g = eg.grad.flatten();
    if (!std::isfinite(eg.value) || !g.allFinite()) {
      diverged = true;
      break;
    }
    b1_pow *= config.adam_beta1;
    b2_pow *= config.adam_beta2;
    first = config.adam_beta1 * first + (1.0 - config.adam_beta1) * g;
    second = config.adam_beta2 * second + (1.0 - config.adam_beta2) * g.cwiseAbs2();
    const double lr = config.learning_rate * std::sqrt(1.0 - b2_pow) / (1.0 - b1_pow);
    params.array() += lr * first.array() / (second.array().sqrt() + config.adam_epsilon);
    result.posterior.unflatten(params);
  }

  if (diverged || !result.posterior.all_finite()) {
    result.final_elbo = std::numeric_limits<double>::quiet_NaN();
  } else {
    // Separate stream so the evaluation draw never overlaps the optimisation draws.
    result.final_elbo = elbo(result.posterior, data, prior, config.eval_samples,
                             config.seed ^ 0x9e3779b97f4a7c15ULL, weight_scale);
  }

  result.point_items.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) result.point_items.push_back(result.posterior.point_item(j));
  result.theta_star = result.posterior.theta.mu.maxCoeff();
  result.degenerate = is_degenerate(result);
  return result;
}

bool is_degenerate(const FitResult& result) {
  if (!result.posterior.all_finite() || !std::isfinite(result.final_elbo)) return true;
  for (double v : result.elbo_trace) {
    if (!std::isfinite(v)) return true;
  }
  if (result.elbo_trace.empty() || result.final_elbo < result.elbo_trace.front()) return true;
  std::vector<double> alphas;
  alphas.reserve(result.point_items.size());
  for (const auto& item : result.point_items) alphas.push_back(item.alpha);
  if (alphas.empty()) {
    for (Eigen::Index j = 0; j < result.posterior.n_items(); ++j)
      alphas.push_back(std::exp(result.posterior.log_alpha.mu[j]));
  }
  return !alphas.empty() && median(std::move(alphas)) < 0.01;
}

SweepResult sweep_sigma_alpha(const ResponseMatrix& data, const FitConfig& config,
                              const FitRunner& runner) {
  SweepResult out;
  bool found = false;
  for (std::size_t k = 0; k < kSigmaAlphaGrid.size(); ++k) {
    FitConfig run_config = config;
    run_config.seed = config.seed + k * kSweepSeedStride;
    const PriorConfig prior{kSigmaAlphaGrid[k]};
    FitResult result = runner(data, prior, run_config);
    const bool degenerate = result.degenerate || is_degenerate(result);
    out.runs.push_back({prior.log_alpha_sigma, run_config.seed, result.final_elbo, degenerate});
    if (!degenerate && (!found || result.final_elbo > out.best.final_elbo)) {
      out.chosen_sigma = prior.log_alpha_sigma;
      out.best = std::move(result);
      found = true;
    }
  }
  if (!found) {
    throw NoValidRunError("all " + std::to_string(kSigmaAlphaGrid.size()) +
                          " sigma_alpha runs were degenerate");
  }
  return out;
}

}  // namespace irt
