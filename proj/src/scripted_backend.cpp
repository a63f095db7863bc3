#include "delta/backend.hpp"

namespace delta {

ScriptedBackend::ScriptedBackend(Vocabulary vocab, LogitVector default_logits)
    : vocab_(std::move(vocab)), default_(std::move(default_logits)) {
  check_length(default_);
}

void ScriptedBackend::check_length(const LogitVector& v) const {
  if (v.size() != vocab_.size()) {
    throw Error(ErrorCode::validation,
                "scripted logits have length " + std::to_string(v.size()) +
                    ", vocabulary has " + std::to_string(vocab_.size()));
  }
  check_finite(v);
}

void ScriptedBackend::set(Key key, LogitVector logits) {
  check_length(logits);
  table_[std::move(key)] = std::move(logits);
}

LogitVector ScriptedBackend::logits(const TokenSequence& seq) const {
  auto it = table_.find(seq.tokens());
  return it == table_.end() ? default_ : it->second;
}

}  // namespace delta
