#include "irt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "irt/error.hpp"
#include "irt/stats.hpp"

namespace irt {

double Sampler::draw(std::mt19937_64& rng) const {
  if (kind == Kind::Fixed) return mean;
  std::normal_distribution<double> normal(mean, sd);
  return normal(rng);
}

void GeneratorSpec::validate() const {
  if (responders < 1) throw ConfigError("generator needs at least 1 responder");
  if (datasets.empty()) throw ConfigError("generator needs at least 1 dataset");
  auto check = [](const Sampler& s, const std::string& name) {
    if (s.kind == Sampler::Kind::Normal && !(s.sd > 0.0)) {
      throw ConfigError(name + " sampler sd must be positive");
    }
  };
  check(theta, "theta");
  check(beta, "beta");
  check(log_alpha, "log_alpha");
  check(logit_gamma, "logit_gamma");
  for (const auto& d : datasets) {
    if (d.items < 1) throw ConfigError("dataset '" + d.id + "' needs at least 1 item");
    if (d.beta) check(*d.beta, "dataset '" + d.id + "' beta");
  }
}

GeneratorSpec canonical_fixture_spec(std::uint64_t seed) {
  GeneratorSpec spec;
  spec.responders = 90;
  spec.theta = Sampler::normal(0.0, 1.5);
  spec.beta = Sampler::normal(0.0, 1.0);
  spec.log_alpha = Sampler::normal(0.0, 0.4);
  spec.logit_gamma = Sampler::normal(-2.0, 1.0);
  spec.seed = seed;
  const std::vector<std::pair<Eigen::Index, double>> layout = {
      {50, -1.0}, {100, 1.5}, {200, 0.0}, {500, 2.5}, {1000, -2.0}, {2000, 0.75}};
  for (std::size_t d = 0; d < layout.size(); ++d) {
    spec.datasets.push_back({"ds" + std::to_string(d + 1), layout[d].first,
                             Sampler::normal(layout[d].second, 1.0)});
  }
  return spec;
}

GroundTruth sample_truth(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  GroundTruth truth;
  truth.thetas.resize(spec.responders);
  for (Eigen::Index i = 0; i < spec.responders; ++i) {
    truth.thetas[i] = spec.theta.draw(rng);
    truth.responder_ids.push_back("r" + std::to_string(i));
  }
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    const auto& ds = spec.datasets[d];
    truth.dataset_ids.push_back(ds.id);
    const Sampler& beta = ds.beta ? *ds.beta : spec.beta;
    for (Eigen::Index k = 0; k < ds.items; ++k) {
      const double log_alpha = spec.log_alpha.draw(rng);
      const double b = beta.draw(rng);
      const double logit_gamma = spec.logit_gamma.draw(rng);
      truth.items.push_back(constrain(log_alpha, b, logit_gamma));
      truth.item_ids.push_back(ds.id + "-" + std::to_string(k));
      truth.dataset_of.push_back(static_cast<int>(d));
    }
  }
  return truth;
}

ResponseMatrix simulate_responses(const GroundTruth& truth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto m = truth.thetas.size();
  const auto n = truth.n_items();
  BinaryMatrix y(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& item = truth.items[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < m; ++i) {
      y(i, j) = unit(rng) < icc_prob(truth.thetas[i], item) ? 1 : 0;
    }
  }
  return {std::move(y), truth.responder_ids, truth.item_ids, truth.dataset_ids, truth.dataset_of};
}

namespace {

// Dataset indices sorted by descending value; ties keep input order.
std::vector<std::size_t> descending_order(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return order;
}

}  // namespace

RecoveryReport recovery_metrics(const GroundTruth& truth, const FitResult& fit) {
  const auto m = truth.thetas.size();
  const auto n = truth.n_items();
  if (fit.posterior.n_responders() != m || fit.posterior.n_items() != n ||
      static_cast<Eigen::Index>(fit.point_items.size()) != n) {
    throw ConfigError("recovery_metrics: fit dimensions do not match ground truth");
  }
  std::vector<double> true_theta(truth.thetas.data(), truth.thetas.data() + m);
  std::vector<double> fit_theta(fit.posterior.theta.mu.data(), fit.posterior.theta.mu.data() + m);
  const double true_star = truth.thetas.maxCoeff();

  std::vector<double> true_beta, fit_beta, true_la, fit_la, true_leh, fit_leh;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& t = truth.items[static_cast<std::size_t>(j)];
    const auto& f = fit.point_items[static_cast<std::size_t>(j)];
    true_beta.push_back(t.beta);
    fit_beta.push_back(f.beta);
    true_la.push_back(std::log(t.alpha));
    fit_la.push_back(std::log(f.alpha));
    true_leh.push_back(leh_score(t, true_star));
    fit_leh.push_back(leh_score(f, fit.theta_star));
  }

  RecoveryReport r;
  r.pearson_theta = pearson(true_theta, fit_theta);
  r.spearman_theta = spearman(true_theta, fit_theta);
  r.pearson_beta = pearson(true_beta, fit_beta);
  r.pearson_log_alpha = pearson(true_la, fit_la);
  r.pearson_leh = pearson(true_leh, fit_leh);
  r.mae_theta = mean_abs_diff(true_theta, fit_theta);
  r.mae_beta = mean_abs_diff(true_beta, fit_beta);
  r.mae_log_alpha = mean_abs_diff(true_la, fit_la);
  r.mae_leh = mean_abs_diff(true_leh, fit_leh);

  std::vector<double> true_p75, fit_p75;
  for (std::size_t d = 0; d < truth.dataset_ids.size(); ++d) {
    std::vector<double> tv, fv;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (truth.dataset_of[static_cast<std::size_t>(j)] == static_cast<int>(d)) {
        tv.push_back(true_leh[static_cast<std::size_t>(j)]);
        fv.push_back(fit_leh[static_cast<std::size_t>(j)]);
      }
    }
    if (tv.empty()) continue;
    DatasetRecovery dr{truth.dataset_ids[d], percentile(tv, 75.0), percentile(fv, 75.0)};
    true_p75.push_back(dr.true_leh_p75);
    fit_p75.push_back(dr.fit_leh_p75);
    r.datasets.push_back(std::move(dr));
  }
  const auto true_order = descending_order(true_p75);
  const auto fit_order = descending_order(fit_p75);
  for (std::size_t k = 0; k < true_order.size(); ++k) {
    if (true_order[k] == fit_order[k]) ++r.leh_rank_matches;
  }
  return r;
}

}  // namespace irt
