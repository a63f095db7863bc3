#include "delta/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "delta/decoder.hpp"

namespace delta {

std::vector<QAExample> parse_dataset(std::string_view jsonl) {
  std::vector<QAExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }

    const std::string where = "line " + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::parse, where + ": " + e.what());
    }
    QAExample ex;
    try {
      if (!j.is_object()) throw Error(ErrorCode::parse, where + ": record must be an object");
      ex.id = j.at("id").get<std::string>();
      ex.question = j.at("question").get<std::string>();
      ex.context = j.value("context", std::string());
      ex.answers = j.value("answers", std::vector<std::string>{});
      ex.is_impossible = j.value("is_impossible", false);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse, where + ": " + e.what());
    }
    if (ex.is_impossible && !ex.answers.empty()) {
      throw Error(ErrorCode::validation,
                  where + ": example '" + ex.id + "' is_impossible but has answers");
    }
    out.push_back(std::move(ex));
    if (end == jsonl.size()) break;
  }
  return out;
}

std::vector<QAExample> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path));
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
    s.replace(p, from.size(), to);
  }
}

}  // namespace

std::string build_prompt(const QAExample& example, std::string_view prompt_template) {
  std::string out(prompt_template);
  for (std::string_view ph : {"{context}", "{question}"}) {
    if (out.find(ph) == std::string::npos) {
      throw Error(ErrorCode::template_error,
                  "prompt template lacks the " + std::string(ph) + " placeholder");
    }
  }
  // Substitute question first so a context containing "{question}" is kept
  // verbatim.
  replace_all(out, "{question}", example.question);
  replace_all(out, "{context}", example.context);
  return out;
}

std::string extract_answer(std::string_view generation, std::string_view abstention) {
  std::string_view answer = generation.substr(0, generation.find('\n'));
  const auto first = answer.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  answer = answer.substr(first, answer.find_last_not_of(" \t\r") - first + 1);
  if (!abstention.empty() && normalize_answer(answer) == normalize_answer(abstention)) return {};
  return std::string(answer);
}

std::vector<QAPrediction> predict(const std::vector<QAExample>& dataset,
                                  const DecodeConfig& config, const LogitSource& source,
                                  const EvalOptions& options) {
  std::vector<QAPrediction> predictions(dataset.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = dataset.size();

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= dataset.size()) return;
      const QAExample& ex = dataset[i];
      try {
        DecodeConfig cfg = config;
        cfg.seed = example_seed(config.seed, ex.id);
        const TokenSequence prompt =
            tokenize(build_prompt(ex, options.prompt_template), source.vocabulary());
        if (prompt.empty()) {
          throw Error(ErrorCode::invalid_input, "prompt tokenizes to nothing");
        }
        const DecodeResult result = generate(prompt, cfg, source);
        predictions[i] = {ex.id, extract_answer(result.text, options.abstention)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        // Report the lowest failing index so the message does not depend on
        // scheduling.
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, dataset.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  if (first_error) {
    const std::string id = dataset[first_error_index].id;
    try {
      std::rethrow_exception(first_error);
    } catch (const Error& e) {
      throw Error(e.code(), "example '" + id + "': " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::backend, "example '" + id + "': " + e.what());
    }
  }
  return predictions;
}

EvalReport evaluate(const std::vector<QAExample>& dataset, const DecodeConfig& config,
                    const LogitSource& source, const EvalOptions& options,
                    std::string name) {
  const DecodeConfig resolved = resolve_config(config, source.vocabulary());
  EvalReport report = aggregate(predict(dataset, resolved, source, options), dataset);
  report.dataset = options.dataset_name;
  report.name = std::move(name);
  report.config_echo = resolved;
  return report;
}

std::pair<EvalReport, EvalReport> run_eval(const std::vector<QAExample>& dataset,
                                           const DecodeConfig& baseline_cfg,
                                           const DecodeConfig& delta_cfg,
                                           const LogitSource& source,
                                           const EvalOptions& options) {
  if (baseline_cfg.alpha != 0.0) {
    throw Error(ErrorCode::invalid_config, "baseline config must have alpha = 0");
  }
  if (baseline_cfg.seed != delta_cfg.seed ||
      baseline_cfg.temperature != delta_cfg.temperature) {
    throw Error(ErrorCode::invalid_config,
                "baseline and delta configs must share seed and temperature");
  }
  return {evaluate(dataset, baseline_cfg, source, options, "Baseline"),
          evaluate(dataset, delta_cfg, source, options, "Delta")};
}

namespace {

std::vector<double> parse_value_list(std::string_view text, const char* what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const std::string item(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - pos));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) {
      throw Error(ErrorCode::invalid_config,
                  std::string("malformed ") + what + " value '" + item + "' in grid spec");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::invalid_config,
                  std::string(what) + " value " + item + " outside [0, 1]");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return values;
}

}  // namespace

SweepGrid parse_grid_spec(std::string_view spec, const DecodeConfig& fixed) {
  const std::size_t x = spec.find('x');
  if (x == std::string_view::npos || spec.find('x', x + 1) != std::string_view::npos) {
    throw Error(ErrorCode::invalid_config,
                "grid spec must look like 'r1,r2,...xa1,a2,...', got '" + std::string(spec) + "'");
  }
  SweepGrid grid;
  grid.r_mask_values = parse_value_list(spec.substr(0, x), "r_mask");
  grid.alpha_values = parse_value_list(spec.substr(x + 1), "alpha");
  grid.fixed = fixed;
  return grid;
}

SweepResult sweep(const std::vector<QAExample>& dataset, const SweepGrid& grid,
                  const LogitSource& source, const EvalOptions& options) {
  if (grid.r_mask_values.empty() || grid.alpha_values.empty()) {
    throw Error(ErrorCode::invalid_config, "sweep grid is empty");
  }
  SweepResult result;
  DecodeConfig base = grid.fixed;
  base.alpha = 0.0;
  result.baseline = evaluate(dataset, base, source, options, "Baseline");

  std::vector<double> r_values = grid.r_mask_values;
  std::vector<double> a_values = grid.alpha_values;
  std::sort(r_values.begin(), r_values.end());
  std::sort(a_values.begin(), a_values.end());
  for (double r : r_values) {
    for (double a : a_values) {
      DecodeConfig cfg = grid.fixed;
      cfg.r_mask = r;
      cfg.alpha = a;
      result.cells.push_back({r, a, evaluate(dataset, cfg, source, options, "Delta")});
    }
  }
  return result;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw Error(ErrorCode::invalid_config, "format must be 'json' or 'csv'");
}

Json report_to_json(const EvalReport& r) {
  Json j;
  j["dataset"] = r.dataset;
  j["mode"] = to_string(r.config_echo.mode);
  j["name"] = r.name;
  j["exact_match"] = r.exact_match;
  j["f1"] = r.f1;
  j["has_ans_em"] = r.has_ans_em ? Json(*r.has_ans_em) : Json(nullptr);
  j["no_ans_em"] = r.no_ans_em ? Json(*r.no_ans_em) : Json(nullptr);
  j["n_examples"] = r.n_examples;
  j["config"] = config_to_json(r.config_echo);
  return j;
}

EvalReport report_from_json(const Json& j) {
  try {
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.name = j.at("name").get<std::string>();
    r.exact_match = j.at("exact_match").get<double>();
    r.f1 = j.at("f1").get<double>();
    if (!j.at("has_ans_em").is_null()) r.has_ans_em = j.at("has_ans_em").get<double>();
    if (!j.at("no_ans_em").is_null()) r.no_ans_em = j.at("no_ans_em").get<double>();
    r.n_examples = j.at("n_examples").get<std::size_t>();
    r.config_echo = config_from_json(j.at("config"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed report: ") + e.what());
  }
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string csv_row(const EvalReport& r) {
  std::string row = csv_field(r.dataset) + "," + to_string(r.config_echo.mode) + "," +
                    csv_field(r.name) + "," + fixed6(r.exact_match) + "," + fixed6(r.f1) + ",";
  if (r.has_ans_em) row += fixed6(*r.has_ans_em);
  row += ",";
  if (r.no_ans_em) row += fixed6(*r.no_ans_em);
  return row;
}

constexpr std::string_view kCsvHeader = "dataset,mode,name,exact_match,f1,has_ans_em,no_ans_em";

}  // namespace

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : reports) out += csv_row(r) + '\n';
  return out;
}

std::string reports_to_json(const std::vector<EvalReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr.dump(2) + '\n';
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out(kCsvHeader);
  out += ",r_mask,alpha\n";
  out += csv_row(result.baseline) + ",,\n";
  for (const auto& c : result.cells) {
    out += csv_row(c.report) + "," + fixed6(c.r_mask) + "," + fixed6(c.alpha) + '\n';
  }
  return out;
}

std::string sweep_to_json(const SweepResult& result) {
  Json j;
  j["baseline"] = report_to_json(result.baseline);
  Json cells = Json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"r_mask", c.r_mask}, {"alpha", c.alpha}, {"report", report_to_json(c.report)}});
  }
  j["cells"] = std::move(cells);
  return j.dump(2) + '\n';
}

SweepResult sweep_from_json(const Json& j) {
  try {
    SweepResult r;
    r.baseline = report_from_json(j.at("baseline"));
    for (const auto& c : j.at("cells")) {
      r.cells.push_back({c.at("r_mask").get<double>(), c.at("alpha").get<double>(),
                         report_from_json(c.at("report"))});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed sweep report: ") + e.what());
  }
}

void emit_report(const std::vector<EvalReport>& reports, ReportFormat format,
                 const std::filesystem::path& path) {
  write_text_file(path, format == ReportFormat::csv ? reports_to_csv(reports)
                                                    : reports_to_json(reports));
}

void emit_sweep(const SweepResult& result, ReportFormat format,
                const std::filesystem::path& path) {
  write_text_file(path, format == ReportFormat::csv ? sweep_to_csv(result) : sweep_to_json(result));
}

}  // namespace delta
