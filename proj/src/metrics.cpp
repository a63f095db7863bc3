#include "delta/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <unordered_map>

#include "delta/backend.hpp"

namespace delta {

namespace {

constexpr std::string_view kPunctuation = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : split_words(normalize_answer(text))) out.push_back(std::move(w));
  return out;
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) return pred == gold ? 1.0 : 0.0;
  std::map<std::string, int> gold_counts;
  for (const auto& g : gold) ++gold_counts[g];
  int common = 0;
  for (const auto& p : pred) {
    auto it = gold_counts.find(p);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string stripped;
  stripped.reserve(text.size());
  for (char c : text) {
    if (kPunctuation.find(c) != std::string_view::npos) continue;
    stripped.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  // Whitespace split after punctuation removal matches a \b-delimited
  // article regex on ASCII input.
  std::string out;
  std::size_t i = 0;
  while (i < stripped.size()) {
    while (i < stripped.size() && std::isspace(static_cast<unsigned char>(stripped[i]))) ++i;
    std::size_t j = i;
    while (j < stripped.size() && !std::isspace(static_cast<unsigned char>(stripped[j]))) ++j;
    if (j > i) {
      std::string_view word(stripped.data() + i, j - i);
      if (!is_article(word)) {
        if (!out.empty()) out.push_back(' ');
        out.append(word);
      }
    }
    i = j;
  }
  return out;
}

int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  const std::string p = normalize_answer(pred);
  if (golds.empty()) return p.empty() ? 1 : 0;
  for (const auto& g : golds) {
    if (p == normalize_answer(g)) return 1;
  }
  return 0;
}

double f1(std::string_view pred, const std::vector<std::string>& golds) {
  const auto p = normalized_tokens(pred);
  if (golds.empty()) return p.empty() ? 1.0 : 0.0;
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_single(p, normalized_tokens(g)));
  return best;
}

EvalReport aggregate(const std::vector<QAPrediction>& predictions,
                     const std::vector<QAExample>& dataset) {
  std::unordered_map<std::string, const QAPrediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.example_id, &p).second) {
      throw Error(ErrorCode::mismatch, "duplicate prediction for example '" + p.example_id + "'");
    }
  }
  if (by_id.size() != dataset.size()) {
    throw Error(ErrorCode::mismatch, std::to_string(predictions.size()) + " predictions for " +
                                         std::to_string(dataset.size()) + " examples");
  }
  if (dataset.empty()) {
    throw Error(ErrorCode::undefined_percentage, "cannot average over an empty dataset");
  }

  double em_sum = 0.0, f1_sum = 0.0, has_sum = 0.0, no_sum = 0.0;
  std::size_t has_n = 0, no_n = 0;
  bool flagged = false;
  for (const auto& ex : dataset) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::mismatch, "missing prediction for example '" + ex.id + "'");
    }
    const std::vector<std::string> no_golds;
    const auto& golds = ex.is_impossible ? no_golds : ex.answers;
    const int em = exact_match(it->second->text, golds);
    em_sum += em;
    f1_sum += f1(it->second->text, golds);
    if (ex.is_impossible) {
      flagged = true;
      no_sum += em;
      ++no_n;
    } else {
      has_sum += em;
      ++has_n;
    }
  }

  EvalReport report;
  const auto n = static_cast<double>(dataset.size());
  report.n_examples = dataset.size();
  report.exact_match = 100.0 * em_sum / n;
  report.f1 = 100.0 * f1_sum / n;
  if (flagged) {
    if (has_n) report.has_ans_em = 100.0 * has_sum / static_cast<double>(has_n);
    report.no_ans_em = 100.0 * no_sum / static_cast<double>(no_n);
  }
  return report;
}

}  // namespace delta
