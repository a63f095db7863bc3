#include "delta/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "delta/decoder.hpp"
#include "delta/harness.hpp"
#include "delta/serialize.hpp"
#include "delta/server.hpp"

namespace delta::cli {

namespace {

// Keys of the JSON config file that are not DecodeConfig fields.
constexpr const char* kCliKeys[] = {"backend", "model",      "dataset", "dataset_name",
                                    "template", "out",       "format",  "workers",
                                    "abstention", "grid",    "port",    "trace"};

bool is_cli_key(const std::string& key) {
  for (const char* k : kCliKeys) {
    if (key == k) return true;
  }
  return false;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raw flag values; only flags the user actually passed are layered over the
/// config file.
struct Flags {
  double alpha = 0, r_mask = 0, beta = 0, temperature = 0;
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 0;
  std::string mask_token;
  std::vector<std::string> stop_tokens;
  std::string backend, model, dataset, dataset_name, template_path, out, format, abstention,
      grid, trace;
  std::size_t workers = 1;
  int port = 8080;
  std::string config_path;
  std::string prompt;
};

struct Options {
  CLI::Option* alpha = nullptr;
  CLI::Option* r_mask = nullptr;
  CLI::Option* beta = nullptr;
  CLI::Option* temperature = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* max_new_tokens = nullptr;
  CLI::Option* sample = nullptr;
  CLI::Option* greedy = nullptr;
  CLI::Option* remask = nullptr;
  CLI::Option* mask_generated = nullptr;
  CLI::Option* mask_token = nullptr;
  CLI::Option* stop_tokens = nullptr;
  CLI::Option* backend = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* dataset = nullptr;
  CLI::Option* dataset_name = nullptr;
  CLI::Option* template_path = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* workers = nullptr;
  CLI::Option* abstention = nullptr;
  CLI::Option* grid = nullptr;
  CLI::Option* port = nullptr;
  CLI::Option* trace = nullptr;
};

void add_decode_options(CLI::App& app, Flags& f, Options& o) {
  o.alpha = app.add_option("--alpha", f.alpha, "Logit ratio of the masked branch, in [0,1] (default 0.3)");
  o.r_mask = app.add_option("--r-mask", f.r_mask, "Fraction of prompt tokens masked, in [0,1] (default 0.7)");
  o.beta = app.add_option("--beta", f.beta, "Plausibility threshold relative to the top token, in [0,1] (default 0.1)");
  o.temperature = app.add_option("--temperature", f.temperature, "Softmax temperature, > 0 (default 1)");
  o.seed = app.add_option("--seed", f.seed, "Random seed (default 0)");
  o.max_new_tokens = app.add_option("--max-new-tokens", f.max_new_tokens, "Generation length limit (default 16)");
  o.sample = app.add_flag("--sample", "Sample from the filtered distribution");
  o.greedy = app.add_flag("--greedy", "Pick the highest-scoring token (default)");
  o.sample->excludes(o.greedy);
  o.remask = app.add_flag("--remask-each-step", "Draw a new mask plan at every step");
  o.mask_generated = app.add_flag("--mask-generated", "Also mask generated tokens");
  o.mask_token = app.add_option("--mask-token", f.mask_token, "Token used as MASK (default: end-of-sequence)");
  o.stop_tokens = app.add_option("--stop-token", f.stop_tokens, "Stop token, repeatable (default: end-of-sequence)");
  o.backend = app.add_option("--backend", f.backend, "Logit source: ngram or scripted (default ngram)")
                  ->check(CLI::IsMember({"ngram", "scripted"}));
  o.model = app.add_option("--model", f.model, "Backend model file (JSON)");
  app.add_option("--config", f.config_path, "JSON config file; flags override it (fallback: $DELTA_CONFIG)");
}

void add_harness_options(CLI::App& app, Flags& f, Options& o) {
  o.dataset = app.add_option("--dataset", f.dataset, "JSON-lines QA dataset");
  o.dataset_name = app.add_option("--dataset-name", f.dataset_name, "Dataset label used in reports");
  o.template_path = app.add_option("--template", f.template_path, "Prompt template file with {context} and {question}");
  o.out = app.add_option("--out", f.out, "Report path (default: stdout)");
  o.format = app.add_option("--format", f.format, "Report format: json or csv (default json)")
                 ->check(CLI::IsMember({"json", "csv"}));
  o.workers = app.add_option("--workers", f.workers, "Parallel workers (default 1)")->check(CLI::PositiveNumber);
  o.abstention = app.add_option("--abstention", f.abstention, "Generation that means 'no answer' (default 'unanswerable')");
}

/// Layers passed flags over the config file into one JSON object.
Json merged_settings(const Flags& f, const Options& o) {
  Json settings = Json::object();
  std::string path = f.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("DELTA_CONFIG"); env && *env) path = env;
  }
  if (!path.empty()) {
    settings = read_json_file(path);
    if (!settings.is_object()) throw UsageError("config file must hold a JSON object");
  }
  auto passed = [](CLI::Option* opt) { return opt && opt->count() > 0; };
  if (passed(o.alpha)) settings["alpha"] = f.alpha;
  if (passed(o.r_mask)) settings["r_mask"] = f.r_mask;
  if (passed(o.beta)) settings["beta"] = f.beta;
  if (passed(o.temperature)) settings["temperature"] = f.temperature;
  if (passed(o.seed)) settings["seed"] = f.seed;
  if (passed(o.max_new_tokens)) settings["max_new_tokens"] = f.max_new_tokens;
  if (passed(o.sample)) settings["mode"] = "sample";
  if (passed(o.greedy)) settings["mode"] = "greedy";
  if (passed(o.remask)) settings["remask_each_step"] = true;
  if (passed(o.mask_generated)) settings["mask_generated"] = true;
  if (passed(o.mask_token)) settings["mask_token"] = f.mask_token;
  if (passed(o.stop_tokens)) settings["stop_tokens"] = f.stop_tokens;
  if (passed(o.backend)) settings["backend"] = f.backend;
  if (passed(o.model)) settings["model"] = f.model;
  if (passed(o.dataset)) settings["dataset"] = f.dataset;
  if (passed(o.dataset_name)) settings["dataset_name"] = f.dataset_name;
  if (passed(o.template_path)) settings["template"] = f.template_path;
  if (passed(o.out)) settings["out"] = f.out;
  if (passed(o.format)) settings["format"] = f.format;
  if (passed(o.workers)) settings["workers"] = f.workers;
  if (passed(o.abstention)) settings["abstention"] = f.abstention;
  if (passed(o.grid)) settings["grid"] = f.grid;
  if (passed(o.port)) settings["port"] = f.port;
  if (passed(o.trace)) settings["trace"] = f.trace;
  return settings;
}

std::string get_string(const Json& s, const char* key, std::string fallback = {}) {
  auto it = s.find(key);
  if (it == s.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw UsageError(std::string("config field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::int64_t get_int(const Json& s, const char* key, std::int64_t fallback) {
  auto it = s.find(key);
  if (it == s.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) throw UsageError(std::string("config field '") + key + "' must be an integer");
  return it->get<std::int64_t>();
}

struct Resolved {
  Json settings;
  std::unique_ptr<LogitSource> source;
  DecodeConfig decode;
};

Resolved resolve(const Flags& f, const Options& o) {
  Resolved r;
  r.settings = merged_settings(f, o);
  const std::string kind = get_string(r.settings, "backend", "ngram");
  const std::string model = get_string(r.settings, "model");
  if (model.empty()) throw UsageError("--model is required");
  r.source = load_backend(kind, model);

  Json decode_keys = Json::object();
  for (const auto& [key, value] : r.settings.items()) {
    if (!is_cli_key(key)) decode_keys[key] = value;
  }
  apply_config_overrides(r.decode, decode_keys, &r.source->vocabulary());
  r.decode = resolve_config(r.decode, r.source->vocabulary());
  return r;
}

EvalOptions eval_options(const Json& s) {
  EvalOptions opts;
  opts.dataset_name = get_string(s, "dataset_name", "dataset");
  if (auto t = get_string(s, "template"); !t.empty()) opts.prompt_template = read_text_file(t);
  opts.abstention = get_string(s, "abstention", std::string(kDefaultAbstention));
  const auto workers = get_int(s, "workers", 1);
  if (workers < 1) throw UsageError("workers must be >= 1");
  opts.workers = static_cast<std::size_t>(workers);
  return opts;
}

void write_output(const Json& s, const std::string& text, std::ostream& out) {
  const std::string path = get_string(s, "out");
  if (path.empty()) out << text;
  else write_text_file(path, text);
}

std::vector<QAExample> dataset_from(const Json& s) {
  const std::string path = get_string(s, "dataset");
  if (path.empty()) throw UsageError("--dataset is required");
  return load_dataset(path);
}

int cmd_decode(const Flags& f, const Options& o, std::ostream& out) {
  Resolved r = resolve(f, o);
  const TokenSequence prompt = tokenize(f.prompt, r.source->vocabulary());
  if (prompt.empty()) throw UsageError("prompt is empty");
  const DecodeResult result = generate(prompt, r.decode, *r.source);
  out << result.text << '\n';
  if (auto trace = get_string(r.settings, "trace"); !trace.empty()) {
    Json j = result_to_json(result, r.source->vocabulary(), true);
    j["config"] = config_to_json(r.decode, &r.source->vocabulary());
    write_text_file(trace, j.dump(2) + '\n');
  }
  return 0;
}

int cmd_eval(const Flags& f, const Options& o, std::ostream& out) {
  Resolved r = resolve(f, o);
  const auto dataset = dataset_from(r.settings);
  const EvalOptions opts = eval_options(r.settings);
  DecodeConfig baseline = r.decode;
  baseline.alpha = 0.0;
  auto [base_report, delta_report] = run_eval(dataset, baseline, r.decode, *r.source, opts);
  const auto format = parse_report_format(get_string(r.settings, "format", "json"));
  const std::vector<EvalReport> reports{base_report, delta_report};
  write_output(r.settings,
               format == ReportFormat::csv ? reports_to_csv(reports) : reports_to_json(reports),
               out);
  return 0;
}

int cmd_sweep(const Flags& f, const Options& o, std::ostream& out) {
  Resolved r = resolve(f, o);
  const auto dataset = dataset_from(r.settings);
  const EvalOptions opts = eval_options(r.settings);
  const SweepGrid grid =
      parse_grid_spec(get_string(r.settings, "grid", std::string(kDefaultGridSpec)), r.decode);
  const SweepResult result = sweep(dataset, grid, *r.source, opts);
  const auto format = parse_report_format(get_string(r.settings, "format", "json"));
  write_output(r.settings, format == ReportFormat::csv ? sweep_to_csv(result) : sweep_to_json(result),
               out);
  return 0;
}

int cmd_serve(const Flags& f, const Options& o, std::ostream& out) {
  Resolved r = resolve(f, o);
  const auto port = get_int(r.settings, "port", 8080);
  if (port < 0 || port > 65535) throw UsageError("port out of range");
  DecodeService service(*r.source, r.decode);
  HttpServer server(service);
  const int bound = server.bind("0.0.0.0", static_cast<int>(port));
  out << "listening on port " << bound << std::endl;
  server.listen();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Masked-prompt contrastive decoding and QA evaluation", "delta"};
  app.require_subcommand(1);
  Flags f;
  Options o;

  auto* decode = app.add_subcommand("decode", "Generate a continuation for one prompt");
  add_decode_options(*decode, f, o);
  decode->add_option("prompt", f.prompt, "Prompt text")->required();
  o.trace = decode->add_option("--trace", f.trace, "Write the per-step trace as JSON to this path");

  auto* eval = app.add_subcommand("eval", "Evaluate baseline and delta decoding on a dataset");
  Options eval_o;
  add_decode_options(*eval, f, eval_o);
  add_harness_options(*eval, f, eval_o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a grid of masking ratios x logit ratios");
  Options sweep_o;
  add_decode_options(*sweep_cmd, f, sweep_o);
  add_harness_options(*sweep_cmd, f, sweep_o);
  sweep_o.grid = sweep_cmd->add_option("--grid", f.grid,
                                       "Grid spec 'r1,r2,..xa1,a2,..' (default " +
                                           std::string(kDefaultGridSpec) + ")");

  auto* serve = app.add_subcommand("serve", "Run the HTTP decode service");
  Options serve_o;
  add_decode_options(*serve, f, serve_o);
  serve_o.port = serve->add_option("--port", f.port, "Listen port (default 8080)");

  auto* train = app.add_subcommand("train-backend", "Train an n-gram model from a text corpus");
  std::string corpus, train_out;
  int order = 3;
  double k = 0.01;
  train->add_option("--corpus", corpus, "Plain-text corpus, one sentence per line")->required();
  train->add_option("--order", order, "N-gram order (default 3)");
  train->add_option("--k", k, "Add-k smoothing constant (default 0.01)");
  train->add_option("--out", train_out, "Model output path")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*decode) return cmd_decode(f, o, out);
    if (*eval) return cmd_eval(f, eval_o, out);
    if (*sweep_cmd) return cmd_sweep(f, sweep_o, out);
    if (*serve) return cmd_serve(f, serve_o, out);
    if (*train) {
      if (order < 1) throw UsageError("--order must be >= 1");
      if (!(k > 0.0)) throw UsageError("--k must be > 0");
      std::vector<std::string> lines;
      std::istringstream in(read_text_file(corpus));
      for (std::string line; std::getline(in, line);) lines.push_back(line);
      const NGramBackend model = train_ngram_from_text(lines, order, k);
      write_text_file(train_out, ngram_to_json(model).dump() + '\n');
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::backend:
      case ErrorCode::internal_invariant:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace delta::cli
