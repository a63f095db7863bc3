#include "delta/serialize.hpp"

#include <fstream>
#include <sstream>

namespace delta {

namespace {

Json token_json(TokenId t, const Vocabulary* vocab) {
  if (vocab) return vocab->token(t);
  return t.value;
}

TokenId token_from_json(const Json& j, const Vocabulary* vocab, const char* field) {
  if (j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    const auto v = j.get<std::uint64_t>();
    if (vocab && v >= vocab->size()) {
      throw Error(ErrorCode::invalid_config,
                  std::string(field) + " id " + std::to_string(v) + " outside vocabulary");
    }
    return TokenId(static_cast<std::uint32_t>(v));
  }
  if (j.is_string()) {
    if (!vocab) {
      throw Error(ErrorCode::invalid_config,
                  std::string(field) + " given as a string without a vocabulary");
    }
    auto id = vocab->find(j.get<std::string>());
    if (!id) {
      throw Error(ErrorCode::invalid_config, std::string(field) + " '" +
                                                 j.get<std::string>() + "' not in vocabulary");
    }
    return *id;
  }
  throw Error(ErrorCode::invalid_config, std::string(field) + " must be a token string or id");
}

template <typename T>
T get_field(const Json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::invalid_config, std::string("bad type for config field '") + key + "'");
  }
}

}  // namespace

Json config_to_json(const DecodeConfig& c, const Vocabulary* vocab) {
  Json j;
  j["alpha"] = c.alpha;
  j["r_mask"] = c.r_mask;
  j["beta"] = c.beta;
  j["temperature"] = c.temperature;
  j["mask_token"] = c.mask_token ? token_json(*c.mask_token, vocab) : Json(nullptr);
  j["seed"] = c.seed;
  j["max_new_tokens"] = c.max_new_tokens;
  if (c.stop_tokens) {
    Json stops = Json::array();
    for (TokenId t : *c.stop_tokens) stops.push_back(token_json(t, vocab));
    j["stop_tokens"] = std::move(stops);
  } else {
    j["stop_tokens"] = nullptr;
  }
  j["remask_each_step"] = c.remask_each_step;
  j["mask_generated"] = c.mask_generated;
  j["mode"] = to_string(c.mode);
  return j;
}

void apply_config_overrides(DecodeConfig& c, const Json& overrides, const Vocabulary* vocab) {
  if (!overrides.is_object()) throw Error(ErrorCode::invalid_config, "config must be an object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "alpha") {
      c.alpha = get_field<double>(value, "alpha");
    } else if (key == "r_mask") {
      c.r_mask = get_field<double>(value, "r_mask");
    } else if (key == "beta") {
      c.beta = get_field<double>(value, "beta");
    } else if (key == "temperature") {
      c.temperature = get_field<double>(value, "temperature");
    } else if (key == "seed") {
      if (!value.is_number_integer() || (value.is_number_integer() && !value.is_number_unsigned() &&
                                         value.get<std::int64_t>() < 0)) {
        throw Error(ErrorCode::invalid_config, "seed must be a non-negative integer");
      }
      c.seed = value.get<std::uint64_t>();
    } else if (key == "max_new_tokens") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 1) {
        throw Error(ErrorCode::invalid_config, "max_new_tokens must be a positive integer");
      }
      c.max_new_tokens = value.get<std::size_t>();
    } else if (key == "mask_token") {
      if (value.is_null()) c.mask_token.reset();
      else c.mask_token = token_from_json(value, vocab, "mask_token");
    } else if (key == "stop_tokens") {
      if (value.is_null()) {
        c.stop_tokens.reset();
      } else {
        if (!value.is_array()) throw Error(ErrorCode::invalid_config, "stop_tokens must be a list");
        std::vector<TokenId> stops;
        for (const auto& t : value) stops.push_back(token_from_json(t, vocab, "stop token"));
        c.stop_tokens = std::move(stops);
      }
    } else if (key == "remask_each_step") {
      c.remask_each_step = get_field<bool>(value, "remask_each_step");
    } else if (key == "mask_generated") {
      c.mask_generated = get_field<bool>(value, "mask_generated");
    } else if (key == "mode") {
      const auto mode = get_field<std::string>(value, "mode");
      if (mode == "greedy") c.mode = DecodeMode::greedy;
      else if (mode == "sample") c.mode = DecodeMode::sample;
      else throw Error(ErrorCode::invalid_config, "mode must be 'greedy' or 'sample'");
    } else {
      throw Error(ErrorCode::invalid_config, "unknown config field '" + key + "'");
    }
  }
}

DecodeConfig config_from_json(const Json& j, const Vocabulary* vocab) {
  DecodeConfig c;
  apply_config_overrides(c, j, vocab);
  return c;
}

Json ngram_to_json(const NGramBackend& model) {
  Json j;
  j["format"] = "delta-ngram";
  j["version"] = NGramBackend::kFormatVersion;
  j["order"] = model.order();
  j["k"] = model.smoothing_k();
  const Vocabulary& v = model.vocabulary();
  j["vocab"] = {{"tokens", v.tokens()}, {"eos", v.eos().value}, {"unk", v.unk().value}};
  Json counts = Json::array();
  for (const auto& [ctx, next] : model.counts()) {
    Json c;
    Json ids = Json::array();
    for (TokenId t : ctx) ids.push_back(t.value);
    c["context"] = std::move(ids);
    Json pairs = Json::array();
    for (const auto& [tok, n] : next) pairs.push_back(Json::array({tok.value, n}));
    c["next"] = std::move(pairs);
    counts.push_back(std::move(c));
  }
  j["counts"] = std::move(counts);
  return j;
}

namespace {

Vocabulary vocab_from_json(const Json& v) {
  if (v.is_array()) {
    auto tokens = v.get<std::vector<std::string>>();
    TokenId eos(0), unk(0);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == Vocabulary::kEos) eos = TokenId(static_cast<std::uint32_t>(i));
      if (tokens[i] == Vocabulary::kUnk) unk = TokenId(static_cast<std::uint32_t>(i));
    }
    return Vocabulary(std::move(tokens), eos, unk);
  }
  return Vocabulary(v.at("tokens").get<std::vector<std::string>>(),
                    TokenId(v.at("eos").get<std::uint32_t>()),
                    TokenId(v.at("unk").get<std::uint32_t>()));
}

template <typename F>
auto guard_parse(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

NGramBackend ngram_from_json(const Json& j) {
  return guard_parse("n-gram model", [&] {
    if (j.value("format", std::string()) != "delta-ngram") {
      throw Error(ErrorCode::parse, "not a delta-ngram model document");
    }
    if (j.at("version").get<int>() != NGramBackend::kFormatVersion) {
      throw Error(ErrorCode::parse, "unsupported n-gram model version");
    }
    std::map<NGramBackend::Context, NGramBackend::Counts> counts;
    for (const auto& c : j.at("counts")) {
      NGramBackend::Context ctx;
      for (const auto& id : c.at("context")) ctx.emplace_back(id.get<std::uint32_t>());
      auto& next = counts[ctx];
      for (const auto& pair : c.at("next")) {
        next[TokenId(pair.at(0).get<std::uint32_t>())] = pair.at(1).get<std::uint64_t>();
      }
    }
    return NGramBackend(vocab_from_json(j.at("vocab")), j.at("order").get<int>(),
                        j.at("k").get<double>(), std::move(counts));
  });
}

ScriptedBackend scripted_from_json(const Json& j) {
  return guard_parse("scripted backend", [&] {
    Vocabulary vocab = vocab_from_json(j.at("vocab"));
    ScriptedBackend backend(vocab, j.at("default").get<LogitVector>());
    if (j.contains("table")) {
      for (const auto& [key, logits] : j.at("table").items()) {
        ScriptedBackend::Key ids;
        for (const auto& w : split_words(key)) {
          auto id = vocab.find(w);
          if (!id) throw Error(ErrorCode::validation, "scripted key token '" + w + "' not in vocabulary");
          ids.push_back(*id);
        }
        backend.set(std::move(ids), logits.get<LogitVector>());
      }
    }
    return backend;
  });
}

Json scripted_to_json(const ScriptedBackend& backend) {
  const Vocabulary& v = backend.vocabulary();
  Json j;
  j["vocab"] = {{"tokens", v.tokens()}, {"eos", v.eos().value}, {"unk", v.unk().value}};
  j["default"] = backend.default_logits();
  Json table = Json::object();
  for (const auto& [key, logits] : backend.table()) table[detokenize(key, v)] = logits;
  j["table"] = std::move(table);
  return j;
}

Json trace_to_json(const StepTrace& t, const Vocabulary& vocab, const TraceOptions& options) {
  Json j;
  j["step"] = t.step;
  j["chosen"] = t.chosen.value;
  j["chosen_token"] = vocab.token(t.chosen);
  Json head = Json::array();
  for (TokenId h : t.head_set) head.push_back(h.value);
  j["head_set"] = std::move(head);
  j["mask_plan"] = {{"indices", t.mask_plan.indices},
                    {"mask_token", t.mask_plan.mask_token.value},
                    {"eligible_len", t.mask_plan.eligible_len}};
  if (vocab.size() <= options.max_logit_vocab) {
    j["original_logits"] = t.original_logits;
    j["masked_logits"] = t.masked_logits;
    j["combined_logits"] = t.combined_logits;
    j["distribution"] = t.distribution;
  } else {
    j["logits_elided"] = true;
  }
  return j;
}

Json result_to_json(const DecodeResult& r, const Vocabulary& vocab, bool include_trace,
                    const TraceOptions& options) {
  Json j;
  j["text"] = r.text;
  Json tokens = Json::array();
  for (TokenId t : r.sequence.generated()) tokens.push_back(t.value);
  j["tokens"] = std::move(tokens);
  j["stop_reason"] = to_string(r.stop_reason);
  if (include_trace) {
    Json traces = Json::array();
    for (const auto& t : r.traces) traces.push_back(trace_to_json(t, vocab, options));
    j["trace"] = std::move(traces);
  }
  return j;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorCode::io, "write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

std::unique_ptr<LogitSource> load_backend(std::string_view kind,
                                          const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  if (kind == "ngram") return std::make_unique<NGramBackend>(ngram_from_json(j));
  if (kind == "scripted") return std::make_unique<ScriptedBackend>(scripted_from_json(j));
  throw Error(ErrorCode::invalid_config, "unknown backend kind '" + std::string(kind) + "'");
}

}  // namespace delta
