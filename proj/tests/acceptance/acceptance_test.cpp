// Acceptance checks for the decoding engine and evaluation harness.
// Prints one PASS/FAIL line per criterion; exits non-zero if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "delta/backend.hpp"
#include "delta/decoder.hpp"
#include "delta/harness.hpp"
#include "delta/masking.hpp"
#include "delta/metrics.hpp"
#include "delta/serialize.hpp"
#include "../ngram_oracle.hpp"

using namespace delta;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<double> uniform_vector(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

std::size_t uniform_size(std::mt19937_64& gen, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

// ---------------------------------------------------------------------------

Outcome alpha_zero_identity() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 gen(20240601);
  constexpr int kBackends = 200;
  std::size_t tokens_checked = 0;
  for (int b = 0; b < kBackends && o.pass; ++b) {
    const std::size_t v = uniform_size(gen, 3, 40);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < v - 2; ++i) words.push_back("w" + std::to_string(i));
    const auto vocab = Vocabulary::with_specials(words);
    ScriptedBackend backend(vocab, uniform_vector(gen, v, -4.0, 4.0));

    std::vector<TokenId> prompt;
    const std::size_t plen = uniform_size(gen, 1, 12);
    for (std::size_t i = 0; i < plen; ++i) {
      prompt.emplace_back(static_cast<std::uint32_t>(uniform_size(gen, 0, v - 1)));
    }

    // Script the baseline path and some unrelated entries, computing the
    // expected greedy tokens by plain argmax as we go.
    DecodeConfig cfg;
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
    cfg.r_mask = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    cfg.seed = gen();
    cfg.max_new_tokens = uniform_size(gen, 1, 10);
    cfg.remask_each_step = gen() % 2 == 0;
    cfg.mask_token = TokenId(static_cast<std::uint32_t>(uniform_size(gen, 0, v - 1)));

    std::vector<TokenId> seq = prompt;
    std::vector<TokenId> expected;
    for (std::size_t step = 0; step < cfg.max_new_tokens; ++step) {
      const auto logits = uniform_vector(gen, v, -4.0, 4.0);
      backend.set(seq, logits);
      std::vector<TokenId> noise = seq;
      noise[gen() % noise.size()] = *cfg.mask_token;
      if (noise != seq) backend.set(noise, uniform_vector(gen, v, -4.0, 4.0));
      const auto best = static_cast<std::uint32_t>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
      expected.emplace_back(best);
      seq.emplace_back(best);
      if (TokenId(best) == vocab.eos()) break;
    }

    const auto result = generate(TokenSequence(prompt), cfg, backend);
    const auto generated = result.sequence.generated();
    o.require(std::vector<TokenId>(generated.begin(), generated.end()) == expected,
              "backend " + std::to_string(b) + " diverged from baseline greedy");
    tokens_checked += expected.size();
  }
  const double secs = seconds_since(start);
  o.require(secs < 5.0, "runtime " + fmt("%.2fs", secs));
  if (o.pass) {
    o.detail = std::to_string(kBackends) + " backends, " + std::to_string(tokens_checked) +
               " tokens identical, " + fmt("%.3fs", secs);
  }
  return o;
}

Outcome combine_arithmetic() {
  Outcome o;
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = uniform_size(gen, 1, 512);
    const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const auto orig = uniform_vector(gen, n, -30.0, 30.0);
    const auto mask = uniform_vector(gen, n, -30.0, 30.0);
    const auto got = delta_combine(orig, mask, alpha);
    o.require(got.size() == n, "length mismatch");
    for (std::size_t i = 0; i < n && i < got.size(); ++i) {
      const long double ref = (1.0L + alpha) * orig[i] - static_cast<long double>(alpha) * mask[i];
      worst = std::max(worst, static_cast<double>(std::fabs(got[i] - ref)));
    }
  }
  o.require(worst <= 1e-12, "max error " + fmt("%.3g", worst));
  if (o.pass) o.detail = "1000 vectors, max |error| " + fmt("%.3g", worst);
  return o;
}

Outcome flip_fixture() {
  Outcome o;
  const Vocabulary vocab({"t0", "t1"}, TokenId(0), TokenId(1));
  // Prompt [t1]; masking every prompt position with t0 gives [t0].
  ScriptedBackend backend(vocab, {0.0, 0.0});
  backend.set({TokenId(1)}, {1.0, 1.1});
  backend.set({TokenId(0)}, {0.0, 3.0});
  const TokenSequence prompt({TokenId(1)});

  DecodeConfig cfg;
  cfg.beta = 0.0;
  cfg.r_mask = 1.0;
  cfg.max_new_tokens = 1;
  cfg.mask_token = TokenId(0);
  cfg.stop_tokens = std::vector<TokenId>{};

  auto run = [&](double alpha) {
    auto c = cfg;
    c.alpha = alpha;
    return generate(prompt, c, backend);
  };
  const auto base = run(0.0);
  const auto delta = run(0.5);
  o.require(base.traces.size() == 1 && delta.traces.size() == 1, "expected one step");
  if (!o.pass) return o;
  const auto& t = delta.traces[0];
  o.require(t.masked_logits == LogitVector{0.0, 3.0}, "masked branch did not see [t0]");
  o.require(t.combined_logits.size() == 2 && t.combined_logits[0] == 1.5 &&
                std::fabs(t.combined_logits[1] - 0.15) < 1e-15,
            "combined logits differ from [1.5, 0.15]");
  o.require(base.traces[0].chosen == TokenId(1), "baseline did not pick token 1");
  o.require(t.chosen == TokenId(0), "delta did not pick token 0");
  if (o.pass) o.detail = "combined [1.5, 0.15]; baseline -> 1, delta -> 0";
  return o;
}

Outcome masked_cue_direction() {
  Outcome o;
  const auto start = Clock::now();
  const std::vector<std::string> corpus{
      "the banana is yellow",        "the banana is yellow",
      "a ripe banana yellow",        "a big banana yellow",
      "my banana yellow",            "this banana yellow",
      "that banana yellow",          "a moldy banana brown",
      "a moldy banana brown",        "there is a moldy banana brown on the table",
      "the sky is blue"};
  const auto model = train_ngram_from_text(corpus, 3, 0.01);
  const test::NGramOracle oracle(corpus, 3, 0.01);
  const auto& vocab = model.vocabulary();

  const auto prompt = tokenize("there is a moldy banana", vocab);
  const MaskPlan plan{{3}, vocab.eos(), prompt.size()};  // "moldy"
  const auto masked = apply_mask(prompt, plan);

  const auto orig = model.logits(prompt);
  const auto mlog = model.logits(masked);
  const auto comb = delta_combine(orig, mlog, 0.3);
  const auto brown = vocab.lookup("brown").index();
  const auto yellow = vocab.lookup("yellow").index();

  const double o_brown = oracle.logit({"moldy", "banana"}, "brown");
  const double o_yellow = oracle.logit({"moldy", "banana"}, "yellow");
  const double m_brown = oracle.logit({"</s>", "banana"}, "brown");
  const double m_yellow = oracle.logit({"</s>", "banana"}, "yellow");
  o.require(std::fabs(orig[brown] - o_brown) < 1e-12 && std::fabs(orig[yellow] - o_yellow) < 1e-12,
            "unmasked logits disagree with the oracle");
  o.require(std::fabs(mlog[brown] - m_brown) < 1e-12 && std::fabs(mlog[yellow] - m_yellow) < 1e-12,
            "masked logits disagree with the oracle");

  const double base_diff = orig[brown] - orig[yellow];
  const double delta_diff = comb[brown] - comb[yellow];
  o.require((o_brown - o_yellow) > (m_brown - m_yellow), "oracle predicts no increase");
  o.require(delta_diff > base_diff, "brown-yellow gap did not grow");
  const double secs = seconds_since(start);
  o.require(secs < 1.0, "runtime " + fmt("%.2fs", secs));
  if (o.pass) {
    o.detail = "gap " + fmt("%.4f", base_diff) + " -> " + fmt("%.4f", delta_diff) + ", " +
               fmt("%.3fs", secs);
  }
  return o;
}

Outcome mask_cardinality() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t plans = 0;
  for (double r : {0.0, 0.3, 0.5, 0.7, 1.0}) {
    for (std::size_t n = 0; n <= 1000 && o.pass; ++n) {
      std::vector<TokenId> prompt(n, TokenId(2));
      // a few generated tokens that must never be touched
      std::vector<TokenId> all = prompt;
      all.insert(all.end(), 3, TokenId(3));
      const TokenSequence seq(all, n);
      Rng rng(derive_seed(n, static_cast<std::uint64_t>(r * 10)));
      const auto plan = select_mask_indices(seq, r, false, TokenId(0), rng);
      const auto floor_n = static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
      const std::set<std::size_t> unique(plan.indices.begin(), plan.indices.end());
      o.require(plan.indices.size() == floor_n,
                "n=" + std::to_string(n) + " r=" + fmt("%.1f", r) + " has " +
                    std::to_string(plan.indices.size()) + " indices");
      o.require(unique.size() == plan.indices.size(), "duplicate index");
      o.require(plan.indices.empty() || plan.indices.back() < n, "index outside the prompt");
      ++plans;
    }
  }
  const double secs = seconds_since(start);
  o.require(secs < 1.0, "runtime " + fmt("%.2fs", secs));
  if (o.pass) o.detail = std::to_string(plans) + " plans exact, " + fmt("%.3fs", secs);
  return o;
}

Outcome plausibility_head() {
  Outcome o;
  std::mt19937_64 gen(99);
  double worst_sum = 0.0;
  for (int c = 0; c < 1000 && o.pass; ++c) {
    const std::size_t n = uniform_size(gen, 2, 64);
    auto orig = uniform_vector(gen, n, -6.0, 6.0);
    if (c % 3 == 0) {
      for (double& x : orig) x = std::round(x);  // plant ties
    }
    const double beta = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const auto head = apc_head(orig, beta);
    const double top = *std::max_element(orig.begin(), orig.end());
    const auto best = argmax_token(orig);
    o.require(std::find(head.begin(), head.end(), best) != head.end(), "argmax missing from head");

    std::vector<TokenId> ties;
    for (std::size_t i = 0; i < n; ++i) {
      if (orig[i] == top) ties.emplace_back(static_cast<std::uint32_t>(i));
    }
    o.require(apc_head(orig, 1.0) == ties, "beta=1 is not the max tie set");
    o.require(apc_head(orig, 0.0).size() == n, "beta=0 dropped tokens");

    // Full decoding step against a scripted backend.
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n - 2; ++i) words.push_back("w" + std::to_string(i));
    const auto vocab = Vocabulary::with_specials(words);
    ScriptedBackend backend(vocab, uniform_vector(gen, n, -6.0, 6.0));
    const TokenSequence prompt({TokenId(2 % static_cast<std::uint32_t>(n))});
    backend.set(prompt.tokens(), orig);
    DecodeConfig cfg;
    cfg.beta = beta;
    cfg.mode = c % 2 == 0 ? DecodeMode::sample : DecodeMode::greedy;
    cfg.temperature = std::uniform_real_distribution<double>(0.2, 2.0)(gen);
    cfg = resolve_config(cfg, vocab);
    Rng mrng(c);
    const auto plan = select_mask_indices(prompt, cfg.r_mask, false, *cfg.mask_token, mrng);
    Rng srng(c + 1000);
    const auto trace = decode_step(prompt, cfg, backend, plan, srng);
    o.require(trace.head_set == head, "decoder head differs from apc_head");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in_head = std::find(head.begin(), head.end(), TokenId(static_cast<std::uint32_t>(i))) !=
                           head.end();
      if (!in_head) o.require(trace.distribution[i] == 0.0, "mass outside the head");
      total += trace.distribution[i];
    }
    worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
    o.require(std::find(head.begin(), head.end(), trace.chosen) != head.end(), "chosen token outside head");
  }
  o.require(worst_sum <= 1e-9, "distribution sum off by " + fmt("%.3g", worst_sum));
  if (o.pass) o.detail = "1000 cases, max |sum-1| " + fmt("%.3g", worst_sum);
  return o;
}

Outcome metrics_parity() {
  Outcome o;
  struct Case {
    std::string pred;
    std::vector<std::string> golds;
    int em;
    double f1;
  };
  const std::vector<Case> cases{
      {"The Cat!", {"cat"}, 1, 1.0},
      {"cat sat mat", {"cat on mat"}, 0, 2.0 / 3.0},
      {"", {}, 1, 1.0},
      {"paris", {}, 0, 0.0},
      {"", {"paris"}, 0, 0.0},
      {"an apple", {"Apple."}, 1, 1.0},
      {"london", {"paris", "London"}, 1, 1.0},
      {"red red", {"red"}, 0, 2.0 / 3.0},
      {"the big red dog", {"a dog"}, 0, 0.5},
      {"  New   York  ", {"new york"}, 1, 1.0},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    o.require(exact_match(c.pred, c.golds) == c.em, "case " + std::to_string(i + 1) + " EM");
    o.require(std::fabs(f1(c.pred, c.golds) - c.f1) < 1e-12, "case " + std::to_string(i + 1) + " F1");
  }
  // unanswerable abstention aggregates into NoAns EM
  const std::vector<QAExample> ds{{"q", "ctx", "question", {}, true}};
  const auto abstained = extract_answer("unanswerable", kDefaultAbstention);
  const auto rep = aggregate({{"q", abstained}}, ds);
  o.require(rep.no_ans_em && *rep.no_ans_em == 100.0, "abstention NoAns EM");
  if (o.pass) o.detail = "10 cases exact, abstention NoAns EM 100";
  return o;
}

// Synthetic prior-vs-context corpus -----------------------------------------

struct Entity {
  const char* name;
  const char* prior;
  const char* cue;
  const char* conflict;
};

constexpr std::array<Entity, 10> kEntities{{
    {"banana", "yellow", "moldy", "brown"},
    {"sky", "blue", "stormy", "gray"},
    {"tomato", "red", "unripe", "green"},
    {"snow", "white", "dirty", "black"},
    {"coffee", "hot", "iced", "cold"},
    {"lemon", "sour", "candied", "sweet"},
    {"road", "dry", "flooded", "wet"},
    {"room", "quiet", "crowded", "loud"},
    {"knife", "sharp", "old", "dull"},
    {"river", "calm", "swollen", "fast"},
}};

constexpr std::array<const char*, 8> kNeutral{"fresh", "big", "small", "my", "this", "that", "his", "her"};

std::vector<std::string> synthetic_corpus() {
  std::vector<std::string> lines;
  for (const auto& e : kEntities) {
    for (const char* m : kNeutral) {
      for (int i = 0; i < 5; ++i) lines.push_back(std::string(m) + " " + e.name + " " + e.prior);
    }
    for (int i = 0; i < 2; ++i) lines.push_back(std::string(e.cue) + " " + e.name + " " + e.prior);
    lines.push_back(std::string(e.cue) + " " + e.name + " " + e.conflict);
  }
  return lines;
}

struct SyntheticExample {
  QAExample qa;
  bool conflict = false;
};

// 10 entities x 5 questions: 2 with the conflicting cue, 3 neutral.
std::vector<SyntheticExample> synthetic_dataset() {
  std::vector<SyntheticExample> out;
  for (std::size_t e = 0; e < kEntities.size(); ++e) {
    const auto& ent = kEntities[e];
    for (int q = 0; q < 5; ++q) {
      const auto& other = kEntities[(e + 1 + q) % kEntities.size()];
      SyntheticExample ex;
      ex.conflict = q < 2;
      ex.qa.id = std::string(ent.name) + "-" + std::to_string(q);
      ex.qa.context = std::string(kNeutral[q]) + " " + other.name + " " + other.prior;
      ex.qa.question = std::string(ex.conflict ? ent.cue : kNeutral[(q + e) % kNeutral.size()]) +
                       " " + ent.name;
      ex.qa.answers = {ex.conflict ? ent.conflict : ent.prior};
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<QAExample> qa_only(const std::vector<SyntheticExample>& ds) {
  std::vector<QAExample> out;
  for (const auto& e : ds) out.push_back(e.qa);
  return out;
}

EvalOptions synthetic_options() {
  EvalOptions o;
  o.dataset_name = "synthetic";
  o.prompt_template = "{context} {question}";
  return o;
}

const NGramBackend& synthetic_model() {
  static const NGramBackend model = train_ngram_from_text(synthetic_corpus(), 3, 0.01);
  return model;
}

// Oracle answer for the first generated token, from exact corpus probabilities.
std::string oracle_answer(const test::NGramOracle& oracle, const Vocabulary& vocab,
                          const std::vector<std::string>& prompt_words,
                          const std::vector<std::size_t>& masked, double alpha, double beta) {
  auto history = [](const std::vector<std::string>& w) {
    return std::vector<std::string>(w.end() - std::min<std::size_t>(2, w.size()), w.end());
  };
  auto masked_words = prompt_words;
  for (auto i : masked) masked_words[i] = "</s>";
  const auto h_orig = history(prompt_words);
  const auto h_mask = history(masked_words);

  const std::size_t v = vocab.size();
  std::vector<double> p(v), comb(v);
  double pmax = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    const auto& w = vocab.token(TokenId(static_cast<std::uint32_t>(i)));
    p[i] = oracle.prob(h_orig, w);
    pmax = std::max(pmax, p[i]);
    comb[i] = (1 + alpha) * std::log(p[i]) - alpha * oracle.logit(h_mask, w);
  }
  std::size_t best = v;
  for (std::size_t i = 0; i < v; ++i) {
    if (p[i] >= beta * pmax && (best == v || comb[i] > comb[best])) best = i;
  }
  return vocab.token(TokenId(static_cast<std::uint32_t>(best)));
}

Outcome synthetic_benefit() {
  Outcome o;
  const auto ds = synthetic_dataset();
  const auto qa = qa_only(ds);
  const auto& model = synthetic_model();
  const auto& vocab = model.vocabulary();
  const test::NGramOracle oracle(synthetic_corpus(), 3, 0.01);
  const auto opts = synthetic_options();

  DecodeConfig delta_cfg;  // alpha 0.3, r_mask 0.7, beta 0.1, greedy
  DecodeConfig base_cfg = delta_cfg;
  base_cfg.alpha = 0.0;

  // Oracle expectations, per example.
  int oracle_base = 0, oracle_delta = 0, oracle_base_conf = 0, oracle_delta_conf = 0;
  std::vector<std::string> expected_delta;
  for (const auto& ex : ds) {
    const auto prompt_text = build_prompt(ex.qa, opts.prompt_template);
    std::vector<std::string> words = split_words(prompt_text);
    for (auto& w : words) std::transform(w.begin(), w.end(), w.begin(), ::tolower);
    const auto seq = tokenize(prompt_text, vocab);
    Rng rng = mask_stream(example_seed(delta_cfg.seed, ex.qa.id), 0, false);
    const auto plan = select_mask_indices(seq, delta_cfg.r_mask, false, vocab.eos(), rng);
    const auto b = oracle_answer(oracle, vocab, words, {}, 0.0, delta_cfg.beta);
    const auto d = oracle_answer(oracle, vocab, words, plan.indices, delta_cfg.alpha, delta_cfg.beta);
    expected_delta.push_back(d);
    const bool bok = b == ex.qa.answers[0];
    const bool dok = d == ex.qa.answers[0];
    oracle_base += bok;
    oracle_delta += dok;
    if (ex.conflict) {
      oracle_base_conf += bok;
      oracle_delta_conf += dok;
    }
  }

  const auto [base, delta] = run_eval(qa, base_cfg, delta_cfg, model, opts);
  const auto preds = predict(qa, delta_cfg, model, opts);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    o.require(preds[i].text == expected_delta[i],
              ds[i].qa.id + ": decoded '" + preds[i].text + "', oracle '" + expected_delta[i] + "'");
  }
  const double n = static_cast<double>(ds.size());
  o.require(std::fabs(base.exact_match - 100.0 * oracle_base / n) < 1e-9, "baseline EM differs from oracle");
  o.require(std::fabs(delta.exact_match - 100.0 * oracle_delta / n) < 1e-9, "delta EM differs from oracle");

  std::vector<QAExample> conflicts;
  for (const auto& e : ds) {
    if (e.conflict) conflicts.push_back(e.qa);
  }
  const auto [cb, cd] = run_eval(conflicts, base_cfg, delta_cfg, model, opts);
  o.require(delta.exact_match >= base.exact_match, "delta EM below baseline");
  o.require(cd.exact_match > cb.exact_match, "no gain on the conflict subset");
  o.require(oracle_delta_conf > oracle_base_conf, "oracle predicts no conflict gain");
  if (o.pass) {
    o.detail = "EM " + fmt("%.1f", base.exact_match) + " -> " + fmt("%.1f", delta.exact_match) +
               ", conflict subset " + fmt("%.1f", cb.exact_match) + " -> " + fmt("%.1f", cd.exact_match) +
               " (matches oracle)";
  }
  return o;
}

// CLI helpers ---------------------------------------------------------------

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(DELTA_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::array<char, 4096> buf{};
  std::string text;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) text.append(buf.data(), n);
  const int status = pclose(pipe);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct SyntheticFiles {
  fs::path dir, corpus, dataset, tmpl, model;
};

const SyntheticFiles& synthetic_files() {
  static const SyntheticFiles files = [] {
    SyntheticFiles f;
    f.dir = fs::temp_directory_path() / "delta_acceptance";
    fs::create_directories(f.dir);
    f.corpus = f.dir / "corpus.txt";
    f.dataset = f.dir / "dataset.jsonl";
    f.tmpl = f.dir / "template.txt";
    f.model = f.dir / "model.json";
    std::ofstream c(f.corpus);
    for (const auto& line : synthetic_corpus()) c << line << "\n";
    std::ofstream d(f.dataset);
    for (const auto& ex : synthetic_dataset()) {
      d << Json{{"id", ex.qa.id},
                {"context", ex.qa.context},
                {"question", ex.qa.question},
                {"answers", ex.qa.answers},
                {"is_impossible", false}}
               .dump()
        << "\n";
    }
    std::ofstream(f.tmpl) << "{context} {question}";
    c.close();
    d.close();
    run_cli("train-backend --corpus " + f.corpus.string() + " --order 3 --k 0.01 --out " + f.model.string());
    return f;
  }();
  return files;
}

Outcome determinism() {
  Outcome o;
  const auto qa = qa_only(synthetic_dataset());
  const auto& model = synthetic_model();
  int runs = 0;
  for (auto mode : {DecodeMode::greedy, DecodeMode::sample}) {
    DecodeConfig cfg;
    cfg.mode = mode;
    cfg.seed = 1234;
    auto base = cfg;
    base.alpha = 0.0;
    auto opts = synthetic_options();
    const auto [b1, d1] = run_eval(qa, base, cfg, model, opts);
    const auto [b2, d2] = run_eval(qa, base, cfg, model, opts);
    opts.workers = 4;
    const auto [b3, d3] = run_eval(qa, base, cfg, model, opts);
    const auto r1 = reports_to_json({b1, d1}) + reports_to_csv({b1, d1});
    const auto r2 = reports_to_json({b2, d2}) + reports_to_csv({b2, d2});
    const auto r3 = reports_to_json({b3, d3}) + reports_to_csv({b3, d3});
    o.require(r1 == r2, std::string(mode == DecodeMode::sample ? "sample" : "greedy") + " rerun differs");
    o.require(r1 == r3, std::string(mode == DecodeMode::sample ? "sample" : "greedy") + " workers 4 differs");
    runs += 3;
  }

  const auto& f = synthetic_files();
  std::string log;
  o.require(fs::exists(f.model), "train-backend produced no model");
  const std::string common = "eval --backend ngram --model " + f.model.string() + " --dataset " +
                             f.dataset.string() + " --template " + f.tmpl.string() + " --seed 1234";
  for (const char* mode : {"--greedy", "--sample"}) {
    std::vector<std::string> outputs;
    for (const char* workers : {"1", "1", "4"}) {
      const auto path = f.dir / ("report_" + std::to_string(outputs.size()) + ".json");
      o.require(run_cli(common + " " + mode + " --workers " + workers + " --format json --out " +
                        path.string(), &log) == 0,
                std::string("cli eval failed: ") + log);
      outputs.push_back(fs::exists(path) ? read_text_file(path) : "");
      ++runs;
    }
    o.require(!outputs[0].empty() && outputs[0] == outputs[1] && outputs[0] == outputs[2],
              std::string("cli reports differ in ") + mode);
  }
  if (o.pass) o.detail = std::to_string(runs) + " runs byte-identical (greedy/sample, workers 1/4, library and CLI)";
  return o;
}

Outcome default_sweep() {
  Outcome o;
  const auto qa = qa_only(synthetic_dataset());
  const auto grid = parse_grid_spec(kDefaultGridSpec, DecodeConfig{});
  const auto a = sweep(qa, grid, synthetic_model(), synthetic_options());
  const auto b = sweep(qa, grid, synthetic_model(), synthetic_options());
  o.require(a.cells.size() == 15, std::to_string(a.cells.size()) + " cells");
  std::size_t i = 0;
  for (double r : {0.3, 0.5, 0.7}) {
    for (double al : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      if (i < a.cells.size()) {
        o.require(a.cells[i].r_mask == r && a.cells[i].alpha == al,
                  "cell " + std::to_string(i) + " out of order");
        o.require(a.cells[i].report.config_echo.r_mask == r && a.cells[i].report.config_echo.alpha == al,
                  "cell " + std::to_string(i) + " config echo mismatch");
      }
      ++i;
    }
  }
  o.require(a.baseline.config_echo.alpha == 0.0, "baseline row is not alpha 0");
  o.require(sweep_to_json(a) == sweep_to_json(b) && sweep_to_csv(a) == sweep_to_csv(b),
            "repeat sweep differs");

  const auto& f = synthetic_files();
  std::string out;
  const int rc = run_cli("sweep --backend ngram --model " + f.model.string() + " --dataset " +
                             f.dataset.string() + " --template " + f.tmpl.string() +
                             " --dataset-name synthetic --format csv",
                         &out);
  o.require(rc == 0, "cli sweep failed: " + out);
  o.require(out == sweep_to_csv(a), "cli sweep csv differs from library sweep");
  if (o.pass) o.detail = "15 cells in (r_mask, alpha) order, repeatable, CLI agrees";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"alpha=0 reproduces baseline greedy decoding", alpha_zero_identity},
      {"contrastive combination matches the elementwise formula (1e-12)", combine_arithmetic},
      {"scripted flip fixture", flip_fixture},
      {"masking the cue widens the in-context answer's logit gap", masked_cue_direction},
      {"mask cardinality is floor(r_mask * n)", mask_cardinality},
      {"plausibility head and filtered distribution", plausibility_head},
      {"EM/F1 on hand-built cases", metrics_parity},
      {"reports are byte-identical across reruns and worker counts", determinism},
      {"default sweep grid", default_sweep},
      {"synthetic conflict dataset: delta beats baseline", synthetic_benefit},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %2zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str());
    failures += !o.pass;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
