#pragma once

// JSON documents: decode configs, trained n-gram models, scripted backend
// tables, and decode traces.

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "delta/backend.hpp"
#include "delta/core.hpp"
#include "delta/decoder.hpp"

namespace delta {

using Json = nlohmann::ordered_json;

/// Token fields are written as strings when a vocabulary is supplied.
Json config_to_json(const DecodeConfig& config, const Vocabulary* vocab = nullptr);

/// Applies the keys present in `overrides` on top of `config`. Token fields
/// accept a vocabulary string or an integer id. Unknown keys are rejected.
void apply_config_overrides(DecodeConfig& config, const Json& overrides,
                            const Vocabulary* vocab = nullptr);

DecodeConfig config_from_json(const Json& j, const Vocabulary* vocab = nullptr);

/// {"format":"delta-ngram","version":1,"order":..,"k":..,
///  "vocab":{"tokens":[..],"eos":..,"unk":..},
///  "counts":[{"context":[ids],"next":[[id,count],..]},..]}
Json ngram_to_json(const NGramBackend& model);
NGramBackend ngram_from_json(const Json& j);

/// {"vocab":[strings] | {"tokens":..,"eos":..,"unk":..},
///  "default":[logits], "table":{"space joined tokens":[logits],..}}
/// A bare string list gets eos = "</s>" and unk = "<unk>" when present,
/// otherwise ids 0.
ScriptedBackend scripted_from_json(const Json& j);
Json scripted_to_json(const ScriptedBackend& backend);

struct TraceOptions {
  /// Logit and probability vectors are omitted when the vocabulary is larger.
  std::size_t max_logit_vocab = 256;
};

Json trace_to_json(const StepTrace& trace, const Vocabulary& vocab,
                   const TraceOptions& options = {});
Json result_to_json(const DecodeResult& result, const Vocabulary& vocab,
                    bool include_trace, const TraceOptions& options = {});

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// kind is "ngram" or "scripted".
std::unique_ptr<LogitSource> load_backend(std::string_view kind,
                                          const std::filesystem::path& path);

}  // namespace delta
