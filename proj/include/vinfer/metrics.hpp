#pragma once

#include <string>
#include <vector>

namespace vinfer {

struct LexicalScores {
    double bleu4 = 0.0;
    double rouge1 = 0.0;
    double rouge_lsum = 0.0;
    double meteor = 0.0;
};

// All four metrics share one tokenizer (lexical_tokens: lowercase alnum
// runs); candidates with no tokens score 0, references with no tokens are a
// data error.

// Geometric mean of clipped 1..4-gram precisions times the brevity penalty;
// zero numerators are replaced by a 1e-9 epsilon.
double bleu4(const std::string& candidate, const std::string& reference);

// Unigram F1 with clipped counts.
double rouge1(const std::string& candidate, const std::string& reference);

// Summary-level ROUGE-L: sentences split on newlines and terminal
// punctuation, per-reference-sentence union LCS, hits clipped by token
// counts on both sides, F1 over total token counts.
double rouge_lsum(const std::string& candidate, const std::string& reference);

// Exact-then-stemmed unigram alignment (no synonym stage), harmonic mean
// weighted 9:1 toward precision, fragmentation penalty 0.5 * (chunks /
// matches)^3.
double meteor(const std::string& candidate, const std::string& reference);

LexicalScores score_pair(const std::string& candidate, const std::string& reference);

// Porter's stemming algorithm as published; used by the METEOR stem stage.
std::string porter_stem(const std::string& word);

struct ScoredPair {
    std::string id;
    LexicalScores scores;
};

struct BatchScores {
    std::vector<ScoredPair> rows;
    LexicalScores mean;
};

struct CandidateRef {
    std::string id;
    std::string candidate;
    std::string reference;
};

BatchScores score_batch(const std::vector<CandidateRef>& pairs);

}  // namespace vinfer
