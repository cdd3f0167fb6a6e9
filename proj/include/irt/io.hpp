#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irt/analysis.hpp"
#include "irt/response_matrix.hpp"
#include "irt/synthetic.hpp"
#include "irt/variational.hpp"

namespace irt {

enum class ResponseFormat { Csv, Jsonl };

/// Parses long-format responses (responder_id, item_id, dataset_id, correct).
/// Responders and items keep their order of first appearance. Throws
/// InputError on duplicates, missing cells, bad `correct` values, or an item
/// listed under two datasets.
ResponseMatrix parse_responses(std::istream& in, ResponseFormat format);
ResponseMatrix load_responses(const std::filesystem::path& path, ResponseFormat format);

/// Long-format CSV, items outer, responders inner.
void write_responses_csv(std::ostream& out, const ResponseMatrix& data);

/// Provenance that does not live in FitResult.
struct FitMetadata {
  std::string command = "fit";
  std::string responses_path;
  std::optional<double> chosen_sigma;
  std::vector<SweepRun> sweep_runs;
};

struct NamedStability {
  std::string name;
  Statistic statistic = Statistic::Leh;
  double percentile = 75.0;
  StabilityReport report;
};

nlohmann::json fit_config_to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& j);

/// Everything needed to rebuild a FitResult, at full double precision.
nlohmann::json fit_to_json(const FitResult& fit, const ResponseMatrix& data,
                           const FitMetadata& meta);

/// Rebuilds a FitResult from fit_to_json output. Throws InputError if the
/// stored responder or item ids do not match `data`.
FitResult fit_from_json(const nlohmann::json& j, const ResponseMatrix& data);

/// Writes items.csv, responders.csv, datasets.csv and fit.json into `dir`,
/// plus stability.csv when `stability` is non-empty. Throws IoError.
void write_report(const std::filesystem::path& dir, const ResponseMatrix& data,
                  const FitResult& fit, const FitMetadata& meta,
                  const std::vector<DatasetSummary>& summaries,
                  const std::vector<NamedStability>& stability = {});

void write_items_csv(std::ostream& out, const ResponseMatrix& data, const FitResult& fit);
void write_responders_csv(std::ostream& out, const ResponseMatrix& data, const FitResult& fit);
void write_datasets_csv(std::ostream& out, const std::vector<DatasetSummary>& summaries);
void write_stability_csv(std::ostream& out, const std::vector<NamedStability>& stability);

/// Writes `content` to `path`, replacing any existing file. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);
nlohmann::json read_json_file(const std::filesystem::path& path);

GeneratorSpec generator_from_json(const nlohmann::json& j);
nlohmann::json generator_to_json(const GeneratorSpec& spec);

/// truth_responders.csv and truth_items.csv at full precision.
void write_truth(const std::filesystem::path& dir, const GroundTruth& truth);
GroundTruth read_truth(const std::filesystem::path& dir);

/// Fixed-point with six decimals.
std::string fixed6(double value);

}  // namespace irt
