#include <doctest.h>

#include <cmath>

#include "irt/error.hpp"
#include "irt/model.hpp"
#include "irt/stats.hpp"
#include "irt/synthetic.hpp"

using namespace irt;

namespace {

GeneratorSpec fixed_spec(Eigen::Index responders, Eigen::Index items, double theta, double alpha,
                         double beta, double gamma) {
  GeneratorSpec spec;
  spec.responders = responders;
  spec.datasets = {{"d", items, {}}};
  spec.theta = Sampler::fixed(theta);
  spec.log_alpha = Sampler::fixed(std::log(alpha));
  spec.beta = Sampler::fixed(beta);
  spec.logit_gamma = Sampler::fixed(logit(gamma));
  return spec;
}

// Empirical accuracy of item j over all responders.
double item_accuracy(const ResponseMatrix& data, Eigen::Index j) {
  return data.responses().col(j).cast<double>().mean();
}

}  // namespace

TEST_CASE("fixed samplers reproduce their value") {
  const auto truth = sample_truth(fixed_spec(4, 7, 0.0, 1.0, 0.0, 0.2));
  CHECK(truth.thetas.size() == 4);
  CHECK(truth.items.size() == 7);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(truth.thetas[i] == 0.0);
  for (const auto& item : truth.items) {
    CHECK(item.alpha == 1.0);
    CHECK(item.beta == 0.0);
    CHECK(item.gamma == doctest::Approx(0.2).epsilon(1e-15));
  }
}

TEST_CASE("beta sample mean over 1e5 items") {
  GeneratorSpec spec;
  spec.responders = 1;
  spec.datasets = {{"d", 100000, {}}};
  spec.seed = 17;
  const auto truth = sample_truth(spec);
  std::vector<double> betas;
  for (const auto& item : truth.items) betas.push_back(item.beta);
  CHECK(std::abs(mean(betas)) < 0.02);
  CHECK(stddev(betas) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_truth is seed deterministic") {
  auto spec = canonical_fixture_spec(5);
  const auto a = sample_truth(spec);
  const auto b = sample_truth(spec);
  CHECK(a.thetas == b.thetas);
  REQUIRE(a.items.size() == b.items.size());
  bool same = true;
  for (std::size_t j = 0; j < a.items.size(); ++j)
    same = same && a.items[j].alpha == b.items[j].alpha && a.items[j].beta == b.items[j].beta &&
           a.items[j].gamma == b.items[j].gamma;
  CHECK(same);
  spec.seed = 6;
  const auto c = sample_truth(spec);
  CHECK(c.thetas != a.thetas);
  CHECK(simulate_responses(a, 1) == simulate_responses(b, 1));
  CHECK_FALSE(simulate_responses(a, 1) == simulate_responses(a, 2));
}

TEST_CASE("canonical fixture layout") {
  const auto spec = canonical_fixture_spec();
  CHECK(spec.responders == 90);
  REQUIRE(spec.datasets.size() == 6);
  const Eigen::Index sizes[] = {50, 100, 200, 500, 1000, 2000};
  Eigen::Index total = 0;
  for (std::size_t d = 0; d < 6; ++d) {
    CHECK(spec.datasets[d].items == sizes[d]);
    total += spec.datasets[d].items;
  }
  CHECK(total == 3850);
  CHECK(spec.theta.sd == 1.5);
  CHECK(spec.log_alpha.sd == 0.4);
  const auto truth = sample_truth(spec);
  const auto data = simulate_responses(truth, spec.seed + 1);
  CHECK(data.n_responders() == 90);
  CHECK(data.n_items() == 3850);
  CHECK(data.n_datasets() == 6);
}

TEST_CASE("invalid generator specs") {
  GeneratorSpec spec;
  spec.responders = 0;
  spec.datasets = {{"d", 3, {}}};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.responders = 2;
  spec.datasets = {{"d", 0, {}}};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.datasets = {{"d", 3, {}}};
  spec.beta = Sampler::normal(0.0, 0.0);
  CHECK_THROWS_AS(sample_truth(spec), ConfigError);
  spec.beta = Sampler::normal(0.0, 1.0);
  spec.datasets = {};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.datasets = {{"d", 3, {}}};
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("upper asymptote: every responder answers a trivial item") {
  const double alpha = 1.3;
  const auto truth = sample_truth(fixed_spec(10000, 1, 0.0, alpha, -40.0 / alpha, 0.5));
  const auto data = simulate_responses(truth, 3);
  CHECK(item_accuracy(data, 0) >= 0.999);
}

TEST_CASE("lower asymptote: accuracy approaches the guessing rate") {
  const double alpha = 0.8, beta = 0.3;
  const auto truth = sample_truth(fixed_spec(10000, 1, beta - 40.0 / alpha, alpha, beta, 0.25));
  const auto data = simulate_responses(truth, 4);
  CHECK(std::abs(item_accuracy(data, 0) - 0.25) <= 0.02);
}

TEST_CASE("property: simulated accuracy matches icc_prob within 3 binomial SE") {
  GeneratorSpec spec;
  spec.responders = 10000;
  spec.datasets = {{"grid", 200, {}}};
  spec.theta = Sampler::fixed(0.4);
  spec.seed = 8;
  const auto truth = sample_truth(spec);
  const auto data = simulate_responses(truth, 9);
  int within = 0;
  for (Eigen::Index j = 0; j < 200; ++j) {
    const double p = icc_prob(0.4, truth.items[static_cast<std::size_t>(j)]);
    const double se = std::sqrt(p * (1 - p) / 10000.0);
    if (std::abs(item_accuracy(data, j) - p) <= 3 * se) ++within;
  }
  // 3 SE covers 99.73% per item; allow the expected handful of excursions.
  CHECK(within >= 197);
}

namespace {

FitResult fit_from_truth(const GroundTruth& truth) {
  const auto n = truth.n_items();
  FitResult fit;
  fit.posterior = PosteriorSet(truth.thetas.size(), n);
  fit.posterior.theta.mu = truth.thetas;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& item = truth.items[static_cast<std::size_t>(j)];
    fit.posterior.log_alpha.mu[j] = std::log(item.alpha);
    fit.posterior.beta.mu[j] = item.beta;
    fit.posterior.logit_gamma.mu[j] = logit(item.gamma);
    fit.point_items.push_back(item);
  }
  fit.theta_star = truth.thetas.maxCoeff();
  return fit;
}

}  // namespace

TEST_CASE("recovery_metrics identity and anti-correlation") {
  GeneratorSpec spec;
  spec.responders = 12;
  spec.datasets = {{"a", 20, {}}, {"b", 30, Sampler::normal(1.0, 1.0)}, {"c", 10, {}}};
  spec.seed = 2;
  const auto truth = sample_truth(spec);
  auto fit = fit_from_truth(truth);
  const auto r = recovery_metrics(truth, fit);
  CHECK(r.pearson_theta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.spearman_theta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.pearson_beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.pearson_log_alpha == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.pearson_leh == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.mae_theta == 0.0);
  CHECK(r.mae_beta == 0.0);
  CHECK(r.mae_log_alpha == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(r.mae_leh == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  REQUIRE(r.datasets.size() == 3);
  for (const auto& d : r.datasets) CHECK(d.true_leh_p75 == doctest::Approx(d.fit_leh_p75));
  CHECK(r.leh_rank_matches == 3);

  fit.posterior.beta.mu = -fit.posterior.beta.mu;
  for (std::size_t j = 0; j < fit.point_items.size(); ++j) fit.point_items[j].beta = -fit.point_items[j].beta;
  CHECK(recovery_metrics(truth, fit).pearson_beta == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("recovery_metrics rejects mismatched dimensions") {
  GeneratorSpec spec;
  spec.responders = 5;
  spec.datasets = {{"a", 6, {}}};
  const auto truth = sample_truth(spec);
  GeneratorSpec other = spec;
  other.datasets = {{"a", 7, {}}};
  CHECK_THROWS_AS(recovery_metrics(truth, fit_from_truth(sample_truth(other))), ConfigError);
}
