#pragma once

// Baseline-vs-delta QA evaluation: dataset ingestion, prompting, decoding,
// scoring, ablation sweeps and report files.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "delta/backend.hpp"
#include "delta/core.hpp"
#include "delta/metrics.hpp"
#include "delta/serialize.hpp"

namespace delta {

inline constexpr std::string_view kDefaultTemplate =
    "Context: {context}\nQuestion: {question}\nAnswer:";
inline constexpr std::string_view kDefaultAbstention = "unanswerable";

/// JSON lines, one object per line:
///   {"id": str, "context": str, "question": str, "answers": [str],
///    "is_impossible": bool}
/// context, answers and is_impossible are optional. Blank lines are skipped.
/// A SQuAD file converts by emitting one line per qas entry with
/// answers = [a.text for a in qa.answers] and context = the paragraph text.
std::vector<QAExample> parse_dataset(std::string_view jsonl);
std::vector<QAExample> load_dataset(const std::filesystem::path& path);

std::string build_prompt(const QAExample& example,
                         std::string_view prompt_template = kDefaultTemplate);

struct EvalOptions {
  std::string dataset_name = "dataset";
  std::string prompt_template = std::string(kDefaultTemplate);
  std::string abstention = std::string(kDefaultAbstention);
  std::size_t workers = 1;
};

/// Cuts a generation at its first line break and maps the abstention string
/// to the empty "no answer" prediction.
std::string extract_answer(std::string_view generation, std::string_view abstention);

/// Decodes every example with a per-example seed example_seed(config.seed, id).
std::vector<QAPrediction> predict(const std::vector<QAExample>& dataset,
                                  const DecodeConfig& config, const LogitSource& source,
                                  const EvalOptions& options);

EvalReport evaluate(const std::vector<QAExample>& dataset, const DecodeConfig& config,
                    const LogitSource& source, const EvalOptions& options,
                    std::string name);

/// Returns {baseline, delta}. The baseline config must have alpha = 0 and
/// share seed and temperature with the delta config.
std::pair<EvalReport, EvalReport> run_eval(const std::vector<QAExample>& dataset,
                                           const DecodeConfig& baseline_cfg,
                                           const DecodeConfig& delta_cfg,
                                           const LogitSource& source,
                                           const EvalOptions& options = {});

struct SweepGrid {
  std::vector<double> r_mask_values;
  std::vector<double> alpha_values;
  DecodeConfig fixed;
};

/// "0.3,0.5,0.7x0.1,0.2,0.3,0.4,0.5": masking ratios, 'x', logit ratios.
SweepGrid parse_grid_spec(std::string_view spec, const DecodeConfig& fixed);

inline constexpr std::string_view kDefaultGridSpec = "0.3,0.5,0.7x0.1,0.2,0.3,0.4,0.5";

struct SweepCell {
  double r_mask = 0.0;
  double alpha = 0.0;
  EvalReport report;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepResult {
  EvalReport baseline;
  std::vector<SweepCell> cells;  // sorted by (r_mask, alpha)

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

SweepResult sweep(const std::vector<QAExample>& dataset, const SweepGrid& grid,
                  const LogitSource& source, const EvalOptions& options = {});

enum class ReportFormat { json, csv };

ReportFormat parse_report_format(std::string_view name);

Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const Json& j);

/// Columns: dataset,mode,name,exact_match,f1,has_ans_em,no_ans_em. Absent
/// split metrics are empty fields.
std::string reports_to_csv(const std::vector<EvalReport>& reports);
std::string reports_to_json(const std::vector<EvalReport>& reports);

/// Sweep CSV appends r_mask and alpha columns; the baseline row leaves them
/// empty.
std::string sweep_to_csv(const SweepResult& result);
std::string sweep_to_json(const SweepResult& result);
SweepResult sweep_from_json(const Json& j);

void emit_report(const std::vector<EvalReport>& reports, ReportFormat format,
                 const std::filesystem::path& path);
void emit_sweep(const SweepResult& result, ReportFormat format,
                const std::filesystem::path& path);

}  // namespace delta
