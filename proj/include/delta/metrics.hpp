#pragma once

// SQuAD-style answer scoring.
//
// normalize_answer applies, in order: ASCII lowercase; delete every ASCII
// punctuation character (!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~); drop the whole
// words "a", "an", "the"; collapse runs of whitespace to single spaces and
// trim. An empty gold list marks an unanswerable question, for which only
// an empty (normalized) prediction scores.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "delta/core.hpp"

namespace delta {

struct QAExample {
  std::string id;
  std::string context;
  std::string question;
  std::vector<std::string> answers;
  bool is_impossible = false;

  friend bool operator==(const QAExample&, const QAExample&) = default;
};

struct QAPrediction {
  std::string example_id;
  std::string text;  // empty means "no answer"
};

struct EvalReport {
  std::string dataset;
  std::string name;
  double exact_match = 0.0;  // percentages
  double f1 = 0.0;
  std::optional<double> has_ans_em;
  std::optional<double> no_ans_em;
  std::size_t n_examples = 0;
  DecodeConfig config_echo;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

std::string normalize_answer(std::string_view text);

int exact_match(std::string_view pred, const std::vector<std::string>& golds);

double f1(std::string_view pred, const std::vector<std::string>& golds);

/// Averages over `dataset` in dataset order. Split metrics are reported only
/// when the dataset flags some example as unanswerable.
EvalReport aggregate(const std::vector<QAPrediction>& predictions,
                     const std::vector<QAExample>& dataset);

}  // namespace delta
