#include "irt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "irt/error.hpp"
#include "irt/stats.hpp"

namespace irt {

namespace {

Quartiles quartiles(const std::vector<double>& v) {
  return {percentile(v, 25.0), percentile(v, 50.0), percentile(v, 75.0)};
}

double item_statistic(const FitResult& fit, Eigen::Index j, Statistic statistic) {
  const auto& item = fit.point_items[static_cast<std::size_t>(j)];
  switch (statistic) {
    case Statistic::Leh:
      return leh_score(item, fit.theta_star);
    case Statistic::LogAlpha:
      return std::log(item.alpha);
  }
  return 0.0;
}

}  // namespace

std::vector<Eigen::Index> UnanimousItems::all() const {
  std::vector<Eigen::Index> out(all_correct);
  out.insert(out.end(), all_incorrect.begin(), all_incorrect.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> item_leh(const FitResult& fit) {
  std::vector<double> out;
  out.reserve(fit.point_items.size());
  for (const auto& item : fit.point_items) out.push_back(leh_score(item, fit.theta_star));
  return out;
}

void check_fit_matches(const FitResult& fit, const ResponseMatrix& data) {
  if (static_cast<Eigen::Index>(fit.point_items.size()) != data.n_items() ||
      fit.posterior.n_responders() != data.n_responders()) {
    throw ConfigError("fit covers " + std::to_string(fit.posterior.n_responders()) + " x " +
                      std::to_string(fit.point_items.size()) + " but data is " +
                      std::to_string(data.n_responders()) + " x " +
                      std::to_string(data.n_items()));
  }
}

std::vector<DatasetSummary> dataset_summaries(const FitResult& fit, const ResponseMatrix& data,
                                              double gamma_threshold) {
  check_fit_matches(fit, data);
  const auto n_sets = static_cast<std::size_t>(data.n_datasets());
  std::vector<std::vector<double>> leh(n_sets), log_alpha(n_sets), beta(n_sets), gamma(n_sets);
  for (Eigen::Index j = 0; j < data.n_items(); ++j) {
    const auto d = static_cast<std::size_t>(data.dataset_of()[static_cast<std::size_t>(j)]);
    const auto& item = fit.point_items[static_cast<std::size_t>(j)];
    leh[d].push_back(leh_score(item, fit.theta_star));
    log_alpha[d].push_back(std::log(item.alpha));
    beta[d].push_back(item.beta);
    gamma[d].push_back(item.gamma);
  }
  const auto unanimous = unanimous_items(data).all();
  std::vector<DatasetSummary> out;
  for (std::size_t d = 0; d < n_sets; ++d) {
    DatasetSummary s;
    s.dataset_id = data.dataset_ids()[d];
    s.item_count = static_cast<Eigen::Index>(leh[d].size());
    if (s.item_count > 0) {
      s.leh = quartiles(leh[d]);
      s.log_alpha = quartiles(log_alpha[d]);
      s.beta = quartiles(beta[d]);
      s.gamma = quartiles(gamma[d]);
      const auto below = std::count_if(gamma[d].begin(), gamma[d].end(),
                                       [&](double g) { return g < gamma_threshold; });
      s.gamma_below_fraction = static_cast<double>(below) / static_cast<double>(s.item_count);
    }
    s.unanimous_count = std::count_if(unanimous.begin(), unanimous.end(), [&](Eigen::Index j) {
      return data.dataset_of()[static_cast<std::size_t>(j)] == static_cast<int>(d);
    });
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> dataset_percentiles(const FitResult& fit, const ResponseMatrix& data,
                                        Statistic statistic, double p) {
  check_fit_matches(fit, data);
  std::vector<std::vector<double>> values(static_cast<std::size_t>(data.n_datasets()));
  for (Eigen::Index j = 0; j < data.n_items(); ++j) {
    values[static_cast<std::size_t>(data.dataset_of()[static_cast<std::size_t>(j)])].push_back(
        item_statistic(fit, j, statistic));
  }
  std::vector<double> out;
  for (const auto& v : values) out.push_back(percentile(v, p));
  return out;
}

UnanimousItems unanimous_items(const ResponseMatrix& data) {
  UnanimousItems out;
  const auto m = data.n_responders();
  for (Eigen::Index j = 0; j < data.n_items(); ++j) {
    const auto correct = data.responses().col(j).cast<Eigen::Index>().sum();
    if (correct == m) {
      out.all_correct.push_back(j);
    } else if (correct == 0) {
      out.all_incorrect.push_back(j);
    }
  }
  return out;
}

StabilityReport stability_check(const FitResult& fit_a, const ResponseMatrix& data_a,
                                const FitResult& fit_b, const ResponseMatrix& data_b,
                                Statistic statistic, double p, double threshold) {
  auto ids_a = data_a.dataset_ids();
  auto ids_b = data_b.dataset_ids();
  {
    auto sa = ids_a;
    auto sb = ids_b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) throw ConfigError("stability_check: the two fits cover different datasets");
  }
  const auto va = dataset_percentiles(fit_a, data_a, statistic, p);
  const auto vb = dataset_percentiles(fit_b, data_b, statistic, p);

  StabilityReport report;
  std::vector<double> diffs;
  for (std::size_t d = 0; d < ids_a.size(); ++d) {
    const auto k = static_cast<std::size_t>(
        std::find(ids_b.begin(), ids_b.end(), ids_a[d]) - ids_b.begin());
    report.dataset_ids.push_back(ids_a[d]);
    report.values_a.push_back(va[d]);
    report.values_b.push_back(vb[k]);
    const double diff = va[d] - vb[k];
    diffs.push_back(diff);
    if (std::abs(diff) > threshold) report.exceeding.push_back(ids_a[d]);
  }
  if (report.values_a == report.values_b) {
    report.pearson_r = 1.0;
  } else {
    report.pearson_r = pearson(report.values_a, report.values_b);
  }
  std::vector<double> abs_diffs(diffs.size());
  std::transform(diffs.begin(), diffs.end(), abs_diffs.begin(), [](double x) { return std::abs(x); });
  report.median_abs_diff = median(abs_diffs);
  report.sd_diff = stddev(diffs);
  return report;
}

GuessingSplit guessing_filter(const FitResult& fit, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("guessing threshold must lie in (0, 1)");
  }
  GuessingSplit out;
  for (std::size_t j = 0; j < fit.point_items.size(); ++j) {
    auto& bucket = fit.point_items[j].gamma < threshold ? out.kept : out.filtered;
    bucket.push_back(static_cast<Eigen::Index>(j));
  }
  if (!fit.point_items.empty()) {
    out.kept_fraction =
        static_cast<double>(out.kept.size()) / static_cast<double>(fit.point_items.size());
  }
  return out;
}

std::vector<AbilityAccuracy> ability_accuracy_pairs(const FitResult& fit,
                                                    const ResponseMatrix& data) {
  check_fit_matches(fit, data);
  std::vector<AbilityAccuracy> out;
  const auto n = static_cast<double>(data.n_items());
  for (Eigen::Index i = 0; i < data.n_responders(); ++i) {
    const auto correct = data.responses().row(i).cast<Eigen::Index>().sum();
    out.push_back({i, fit.posterior.theta.mu[i], static_cast<double>(correct) / n});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AbilityAccuracy& a, const AbilityAccuracy& b) { return a.theta > b.theta; });
  return out;
}

std::vector<Eigen::Index> top_k_responders(const FitResult& fit, Eigen::Index k) {
  const auto& mu = fit.posterior.theta.mu;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(mu.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mu[a] > mu[b]; });
  order.resize(static_cast<std::size_t>(std::clamp<Eigen::Index>(k, 0, mu.size())));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace irt
