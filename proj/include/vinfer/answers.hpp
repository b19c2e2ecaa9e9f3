#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vinfer/corpus.hpp"

namespace vinfer {

enum class NormalizedKind { choice, numeric, text, unparsed };

std::string to_string(NormalizedKind k);

struct NormalizedAnswer {
    NormalizedKind kind = NormalizedKind::unparsed;
    std::string canonical;
    std::optional<double> numeric_value;
};

// Hint steering extraction toward the expected answer shape; none means
// "take whatever parses best".
enum class KindHint { none, choice, numeric, text };

KindHint hint_for(const AnswerKey& gold);

// Extracts a final answer from free-form model output. Scans for the last
// answer marker ("Answer:" or "the answer is") and reads its line; without a
// marker the whole text is scanned with last-occurrence rules (last
// standalone choice letter A..E, last number). Units are dropped by the
// number scan; fractions and multiples of pi evaluate numerically. Never
// throws; anything unextractable comes back as the unparsed sentinel.
NormalizedAnswer normalize_answer(const std::string& raw, KindHint hint = KindHint::none);

inline constexpr double kDefaultNumericTol = 1e-2;

// Rule-based matcher, dispatched on the gold kind. Numeric comparison is a
// relative-absolute hybrid: |pred - gold| <= tol * max(1, |gold|); tol = 0
// demands exact equality. The unparsed sentinel never matches.
bool match_answer(const NormalizedAnswer& pred, const AnswerKey& gold,
                  double tol = kDefaultNumericTol);

// Convenience: normalize raw output with a hint taken from gold, then match.
bool match_raw_answer(const std::string& raw, const AnswerKey& gold,
                      double tol = kDefaultNumericTol);

struct JudgeVerdict {
    bool matched = false;
    bool used_fallback = false;
};

// Invokes the judge model with a rendered prompt; throws on backend failure.
using JudgeInvoker = std::function<std::string(const std::string& prompt)>;

// The prompt template shipped at templates/judge.txt; kept in sync by test.
const std::string& default_judge_template();

// Renders the judge prompt by substituting {response} and {gold}.
std::string judge_prompt(const std::string& raw_response, const AnswerKey& gold,
                         const std::string& template_text = default_judge_template());

// Scans a judge reply for the verdict tokens; nullopt when neither appears.
std::optional<bool> parse_judge_reply(const std::string& reply);

// Judge-backed matching with a guaranteed resolution: failures and
// unparseable verdicts fall back to the rule-based matcher and are flagged.
JudgeVerdict judge_match(const std::string& raw_response, const AnswerKey& gold,
                         const JudgeInvoker& invoke, double tol = kDefaultNumericTol,
                         const std::string& template_text = default_judge_template());

struct JudgeAgreement {
    int n = 0;
    int agree = 0;
    int judge_fallbacks = 0;
    double rate = 0.0;
};

// Paired rule-vs-judge comparison over a batch; feeds the divergence column.
JudgeAgreement judge_agreement(const std::vector<std::pair<std::string, AnswerKey>>& items,
                               const JudgeInvoker& invoke, double tol = kDefaultNumericTol);

}  // namespace vinfer
