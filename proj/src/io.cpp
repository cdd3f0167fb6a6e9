#include "irt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "irt/error.hpp"

namespace irt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kResponseColumns[] = {"responder_id", "item_id", "dataset_id", "correct"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no); }

std::string quote_id(const std::string& s) { return "'" + s + "'"; }

// Accumulates rows, then assembles the dense matrix.
class MatrixBuilder {
 public:
  void add(const std::string& responder, const std::string& item, const std::string& dataset,
           int correct, std::size_t line_no) {
    if (correct != 0 && correct != 1) {
      throw InputError(where(line_no) + ": correct must be 0 or 1, got " +
                       std::to_string(correct));
    }
    const auto r = intern(responders_, responder_index_, responder);
    const auto i = intern(items_, item_index_, item);
    const auto d = intern(datasets_, dataset_index_, dataset);
    if (i == item_dataset_.size()) {
      item_dataset_.push_back(static_cast<int>(d));
    } else if (item_dataset_[i] != static_cast<int>(d)) {
      throw InputError(where(line_no) + ": item " + quote_id(item) + " appears under datasets " +
                       quote_id(datasets_[static_cast<std::size_t>(item_dataset_[i])]) + " and " +
                       quote_id(dataset));
    }
    const auto key = std::make_pair(r, i);
    if (!cells_.emplace(key, static_cast<std::uint8_t>(correct)).second) {
      throw InputError(where(line_no) + ": duplicate response for responder " +
                       quote_id(responder) + " item " + quote_id(item));
    }
  }

  ResponseMatrix build() && {
    const auto m = static_cast<Eigen::Index>(responders_.size());
    const auto n = static_cast<Eigen::Index>(items_.size());
    const auto expected = static_cast<std::size_t>(m * n);
    if (cells_.size() != expected) {
      std::string example;
      for (Eigen::Index j = 0; j < n && example.empty(); ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
          if (!cells_.count({static_cast<std::size_t>(i), static_cast<std::size_t>(j)})) {
            example = "responder " + quote_id(responders_[static_cast<std::size_t>(i)]) + " item " +
                      quote_id(items_[static_cast<std::size_t>(j)]);
            break;
          }
        }
      }
      throw InputError("incomplete response matrix: " + std::to_string(expected - cells_.size()) +
                       " missing cell(s), e.g. " + example);
    }
    BinaryMatrix y(m, n);
    for (const auto& [key, value] : cells_) {
      y(static_cast<Eigen::Index>(key.first), static_cast<Eigen::Index>(key.second)) = value;
    }
    return {std::move(y), std::move(responders_), std::move(items_), std::move(datasets_),
            std::move(item_dataset_)};
  }

 private:
  static std::size_t intern(std::vector<std::string>& names,
                            std::unordered_map<std::string, std::size_t>& index,
                            const std::string& name) {
    const auto [it, inserted] = index.emplace(name, names.size());
    if (inserted) names.push_back(name);
    return it->second;
  }

  struct PairHash {
    std::size_t operator()(const std::pair<std::size_t, std::size_t>& p) const {
      return p.first * 1000003u ^ p.second;
    }
  };

  std::vector<std::string> responders_, items_, datasets_;
  std::unordered_map<std::string, std::size_t> responder_index_, item_index_, dataset_index_;
  std::vector<int> item_dataset_;
  std::unordered_map<std::pair<std::size_t, std::size_t>, std::uint8_t, PairHash> cells_;
};

int parse_correct(const std::string& field, std::size_t line_no) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw InputError(where(line_no) + ": correct must be 0 or 1, got " + quote_id(field));
}

ResponseMatrix parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw InputError("responses file is empty (header required)");
  std::size_t col[4];
  for (std::size_t k = 0; k < 4; ++k) {
    const auto it = std::find(header.begin(), header.end(), kResponseColumns[k]);
    if (it == header.end()) {
      throw InputError(where(line_no) + ": header is missing column " +
                       quote_id(kResponseColumns[k]));
    }
    col[k] = static_cast<std::size_t>(it - header.begin());
  }
  MatrixBuilder builder;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw InputError(where(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    builder.add(fields[col[0]], fields[col[1]], fields[col[2]], parse_correct(fields[col[3]], line_no),
                line_no);
  }
  return std::move(builder).build();
}

std::string json_id(const json& obj, const char* key, std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where(line_no) + ": missing key " + quote_id(key));
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw InputError(where(line_no) + ": key " + quote_id(key) + " must be a string");
}

int json_correct(const json& obj, std::size_t line_no) {
  const auto it = obj.find("correct");
  if (it == obj.end()) throw InputError(where(line_no) + ": missing key 'correct'");
  if (it->is_boolean()) return it->get<bool>() ? 1 : 0;
  if (it->is_number_integer()) {
    const auto v = it->get<long long>();
    if (v == 0 || v == 1) return static_cast<int>(v);
  }
  throw InputError(where(line_no) + ": correct must be 0 or 1, got " + it->dump());
}

ResponseMatrix parse_jsonl(std::istream& in) {
  MatrixBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where(line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw InputError(where(line_no) + ": expected a JSON object");
    builder.add(json_id(obj, "responder_id", line_no), json_id(obj, "item_id", line_no),
                json_id(obj, "dataset_id", line_no), json_correct(obj, line_no), line_no);
  }
  return std::move(builder).build();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

json block_to_json(const GaussianBlock& b) {
  return {{"mu", std::vector<double>(b.mu.data(), b.mu.data() + b.mu.size())},
          {"log_sigma", std::vector<double>(b.log_sigma.data(), b.log_sigma.data() + b.size())}};
}

GaussianBlock block_from_json(const json& j, Eigen::Index expected, const char* name) {
  const auto mu = j.at("mu").get<std::vector<double>>();
  const auto ls = j.at("log_sigma").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(mu.size()) != expected ||
      static_cast<Eigen::Index>(ls.size()) != expected) {
    throw InputError(std::string("fit.json posterior block '") + name + "' has wrong length");
  }
  GaussianBlock b;
  b.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), expected);
  b.log_sigma = Eigen::Map<const Eigen::VectorXd>(ls.data(), expected);
  return b;
}

json sampler_to_json(const Sampler& s) {
  if (s.kind == Sampler::Kind::Fixed) return {{"fixed", s.mean}};
  return {{"mean", s.mean}, {"sd", s.sd}};
}

Sampler sampler_from_json(const json& j) {
  if (j.contains("fixed")) return Sampler::fixed(j.at("fixed").get<double>());
  return Sampler::normal(j.value("mean", 0.0), j.value("sd", 1.0));
}

const char* statistic_name(Statistic s) { return s == Statistic::Leh ? "leh" : "log_alpha"; }

}  // namespace

std::string fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

ResponseMatrix parse_responses(std::istream& in, ResponseFormat format) {
  return format == ResponseFormat::Csv ? parse_csv(in) : parse_jsonl(in);
}

ResponseMatrix load_responses(const fs::path& path, ResponseFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return parse_responses(in, format);
}

void write_responses_csv(std::ostream& out, const ResponseMatrix& data) {
  out << "responder_id,item_id,dataset_id,correct\n";
  for (Eigen::Index j = 0; j < data.n_items(); ++j) {
    const auto& item = data.item_ids()[static_cast<std::size_t>(j)];
    const auto& ds = data.dataset_ids()[static_cast<std::size_t>(data.dataset_of()[static_cast<std::size_t>(j)])];
    for (Eigen::Index i = 0; i < data.n_responders(); ++i) {
      out << data.responder_ids()[static_cast<std::size_t>(i)] << ',' << item << ',' << ds << ','
          << (data.correct(i, j) ? '1' : '0') << '\n';
    }
  }
}

json fit_config_to_json(const FitConfig& c) {
  return {{"steps", c.steps},
          {"learning_rate", c.learning_rate},
          {"mc_samples", c.mc_samples},
          {"seed", c.seed},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"eval_samples", c.eval_samples},
          {"weight_scale", c.weight_scale}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.steps = j.value("steps", c.steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.mc_samples = j.value("mc_samples", c.mc_samples);
  c.seed = j.value("seed", c.seed);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.eval_samples = j.value("eval_samples", c.eval_samples);
  c.weight_scale = j.value("weight_scale", c.weight_scale);
  return c;
}

json fit_to_json(const FitResult& fit, const ResponseMatrix& data, const FitMetadata& meta) {
  json j;
  j["command"] = meta.command;
  j["responses"] = meta.responses_path;
  j["seed"] = fit.config.seed;
  j["config"] = fit_config_to_json(fit.config);
  j["sigma_alpha"] = fit.prior.log_alpha_sigma;
  j["chosen_sigma_alpha"] = meta.chosen_sigma ? json(*meta.chosen_sigma) : json(nullptr);
  json runs = json::array();
  for (const auto& r : meta.sweep_runs) {
    runs.push_back({{"sigma_alpha", r.sigma_alpha},
                    {"seed", r.seed},
                    {"final_elbo", std::isfinite(r.final_elbo) ? json(r.final_elbo) : json(nullptr)},
                    {"degenerate", r.degenerate}});
  }
  j["sweep_runs"] = runs;
  j["final_elbo"] = std::isfinite(fit.final_elbo) ? json(fit.final_elbo) : json(nullptr);
  j["degenerate"] = fit.degenerate;
  j["theta_star"] = fit.theta_star;
  json trace = json::array();
  for (double v : fit.elbo_trace) trace.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["elbo_trace"] = trace;
  j["responder_ids"] = data.responder_ids();
  j["item_ids"] = data.item_ids();
  j["posterior"] = {{"theta", block_to_json(fit.posterior.theta)},
                    {"log_alpha", block_to_json(fit.posterior.log_alpha)},
                    {"beta", block_to_json(fit.posterior.beta)},
                    {"logit_gamma", block_to_json(fit.posterior.logit_gamma)}};
  return j;
}

FitResult fit_from_json(const json& j, const ResponseMatrix& data) {
  try {
    if (j.at("responder_ids").get<std::vector<std::string>>() != data.responder_ids() ||
        j.at("item_ids").get<std::vector<std::string>>() != data.item_ids()) {
      throw InputError("fit.json was produced from a different response matrix");
    }
    FitResult fit;
    fit.config = fit_config_from_json(j.at("config"));
    fit.prior.log_alpha_sigma = j.at("sigma_alpha").get<double>();
    const auto& post = j.at("posterior");
    fit.posterior.theta = block_from_json(post.at("theta"), data.n_responders(), "theta");
    fit.posterior.log_alpha = block_from_json(post.at("log_alpha"), data.n_items(), "log_alpha");
    fit.posterior.beta = block_from_json(post.at("beta"), data.n_items(), "beta");
    fit.posterior.logit_gamma =
        block_from_json(post.at("logit_gamma"), data.n_items(), "logit_gamma");
    for (const auto& v : j.at("elbo_trace")) {
      fit.elbo_trace.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    }
    const auto& fe = j.at("final_elbo");
    fit.final_elbo = fe.is_null() ? std::numeric_limits<double>::quiet_NaN() : fe.get<double>();
    fit.degenerate = j.at("degenerate").get<bool>();
    for (Eigen::Index k = 0; k < data.n_items(); ++k) {
      fit.point_items.push_back(fit.posterior.point_item(k));
    }
    fit.theta_star = fit.posterior.theta.mu.maxCoeff();
    return fit;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed fit.json: ") + e.what());
  }
}

void write_items_csv(std::ostream& out, const ResponseMatrix& data, const FitResult& fit) {
  out << "item_id,dataset_id,alpha,log_alpha,beta,gamma,leh\n";
  for (Eigen::Index j = 0; j < data.n_items(); ++j) {
    const auto& item = fit.point_items[static_cast<std::size_t>(j)];
    out << data.item_ids()[static_cast<std::size_t>(j)] << ','
        << data.dataset_ids()[static_cast<std::size_t>(data.dataset_of()[static_cast<std::size_t>(j)])]
        << ',' << fixed6(item.alpha) << ',' << fixed6(std::log(item.alpha)) << ','
        << fixed6(item.beta) << ',' << fixed6(item.gamma) << ','
        << fixed6(leh_score(item, fit.theta_star)) << '\n';
  }
}

void write_responders_csv(std::ostream& out, const ResponseMatrix& data, const FitResult& fit) {
  out << "responder_id,theta_mu,theta_sigma,mean_accuracy\n";
  const auto n = static_cast<double>(data.n_items());
  for (Eigen::Index i = 0; i < data.n_responders(); ++i) {
    const auto correct = data.responses().row(i).cast<Eigen::Index>().sum();
    out << data.responder_ids()[static_cast<std::size_t>(i)] << ','
        << fixed6(fit.posterior.theta.mu[i]) << ',' << fixed6(fit.posterior.theta[i].sigma())
        << ',' << fixed6(static_cast<double>(correct) / n) << '\n';
  }
}

void write_datasets_csv(std::ostream& out, const std::vector<DatasetSummary>& summaries) {
  out << "dataset_id,item_count,leh_p25,leh_p50,leh_p75,log_alpha_p25,log_alpha_p50,"
         "log_alpha_p75,beta_p25,beta_p50,beta_p75,gamma_p25,gamma_p50,gamma_p75,"
         "gamma_below_fraction,unanimous_count\n";
  for (const auto& s : summaries) {
    out << s.dataset_id << ',' << s.item_count;
    for (const Quartiles* q : {&s.leh, &s.log_alpha, &s.beta, &s.gamma}) {
      out << ',' << fixed6(q->p25) << ',' << fixed6(q->p50) << ',' << fixed6(q->p75);
    }
    out << ',' << fixed6(s.gamma_below_fraction) << ',' << s.unanimous_count << '\n';
  }
}

void write_stability_csv(std::ostream& out, const std::vector<NamedStability>& stability) {
  out << "comparison,statistic,percentile,dataset_id,value_a,value_b,abs_diff\n";
  for (const auto& s : stability) {
    for (std::size_t d = 0; d < s.report.dataset_ids.size(); ++d) {
      out << s.name << ',' << statistic_name(s.statistic) << ',' << fixed6(s.percentile) << ','
          << s.report.dataset_ids[d] << ',' << fixed6(s.report.values_a[d]) << ','
          << fixed6(s.report.values_b[d]) << ','
          << fixed6(std::abs(s.report.values_a[d] - s.report.values_b[d])) << '\n';
    }
  }
}

void write_text_file(const fs::path& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_report(const fs::path& dir, const ResponseMatrix& data, const FitResult& fit,
                  const FitMetadata& meta, const std::vector<DatasetSummary>& summaries,
                  const std::vector<NamedStability>& stability) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  json fj = fit_to_json(fit, data, meta);
  if (!stability.empty()) {
    json reports = json::array();
    for (const auto& s : stability) {
      reports.push_back({{"name", s.name},
                         {"statistic", statistic_name(s.statistic)},
                         {"percentile", s.percentile},
                         {"pearson_r", s.report.pearson_r},
                         {"median_abs_diff", s.report.median_abs_diff},
                         {"sd_diff", s.report.sd_diff},
                         {"exceeding", s.report.exceeding}});
    }
    fj["stability"] = reports;
  }
  write_text_file(dir / "fit.json", fj.dump(2) + "\n");

  auto emit = [&](const char* name, auto&& writer) {
    std::ostringstream ss;
    writer(ss);
    write_text_file(dir / name, ss.str());
  };
  emit("items.csv", [&](std::ostream& o) { write_items_csv(o, data, fit); });
  emit("responders.csv", [&](std::ostream& o) { write_responders_csv(o, data, fit); });
  emit("datasets.csv", [&](std::ostream& o) { write_datasets_csv(o, summaries); });
  if (!stability.empty()) {
    emit("stability.csv", [&](std::ostream& o) { write_stability_csv(o, stability); });
  }
}

GeneratorSpec generator_from_json(const json& j) {
  try {
    GeneratorSpec spec;
    spec.responders = j.at("responders").get<Eigen::Index>();
    for (const auto& d : j.at("datasets")) {
      DatasetSpec ds{d.at("id").get<std::string>(), d.at("items").get<Eigen::Index>(), {}};
      if (d.contains("beta")) ds.beta = sampler_from_json(d.at("beta"));
      spec.datasets.push_back(std::move(ds));
    }
    if (j.contains("theta")) spec.theta = sampler_from_json(j.at("theta"));
    if (j.contains("beta")) spec.beta = sampler_from_json(j.at("beta"));
    if (j.contains("log_alpha")) spec.log_alpha = sampler_from_json(j.at("log_alpha"));
    if (j.contains("logit_gamma")) spec.logit_gamma = sampler_from_json(j.at("logit_gamma"));
    spec.seed = j.value("seed", spec.seed);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed generator spec: ") + e.what());
  }
}

json generator_to_json(const GeneratorSpec& spec) {
  json datasets = json::array();
  for (const auto& d : spec.datasets) {
    json dj = {{"id", d.id}, {"items", d.items}};
    if (d.beta) dj["beta"] = sampler_to_json(*d.beta);
    datasets.push_back(dj);
  }
  return {{"responders", spec.responders},
          {"datasets", datasets},
          {"theta", sampler_to_json(spec.theta)},
          {"beta", sampler_to_json(spec.beta)},
          {"log_alpha", sampler_to_json(spec.log_alpha)},
          {"logit_gamma", sampler_to_json(spec.logit_gamma)},
          {"seed", spec.seed}};
}

void write_truth(const fs::path& dir, const GroundTruth& truth) {
  std::ostringstream r;
  r << "responder_id,theta\n";
  for (Eigen::Index i = 0; i < truth.thetas.size(); ++i) {
    r << truth.responder_ids[static_cast<std::size_t>(i)] << ',' << full(truth.thetas[i]) << '\n';
  }
  write_text_file(dir / "truth_responders.csv", r.str());
  std::ostringstream it;
  it << "item_id,dataset_id,log_alpha,beta,logit_gamma\n";
  for (std::size_t j = 0; j < truth.items.size(); ++j) {
    const auto& item = truth.items[j];
    it << truth.item_ids[j] << ','
       << truth.dataset_ids[static_cast<std::size_t>(truth.dataset_of[j])] << ','
       << full(std::log(item.alpha)) << ',' << full(item.beta) << ',' << full(logit(item.gamma))
       << '\n';
  }
  write_text_file(dir / "truth_items.csv", it.str());
}

GroundTruth read_truth(const fs::path& dir) {
  auto read_rows = [](const fs::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto fields = split_csv(line);
      if (fields.size() != columns) throw InputError(path.string() + ": malformed row");
      rows.push_back(std::move(fields));
    }
    return rows;
  };
  GroundTruth truth;
  const auto responders = read_rows(dir / "truth_responders.csv", 2);
  truth.thetas.resize(static_cast<Eigen::Index>(responders.size()));
  for (std::size_t i = 0; i < responders.size(); ++i) {
    truth.responder_ids.push_back(responders[i][0]);
    truth.thetas[static_cast<Eigen::Index>(i)] = std::stod(responders[i][1]);
  }
  std::map<std::string, int> dataset_index;
  for (const auto& row : read_rows(dir / "truth_items.csv", 5)) {
    truth.item_ids.push_back(row[0]);
    const auto [it, inserted] =
        dataset_index.emplace(row[1], static_cast<int>(truth.dataset_ids.size()));
    if (inserted) truth.dataset_ids.push_back(row[1]);
    truth.dataset_of.push_back(it->second);
    truth.items.push_back(constrain(std::stod(row[2]), std::stod(row[3]), std::stod(row[4])));
  }
  return truth;
}

}  // namespace irt
