#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vinfer {

// Word-level token count: the number of whitespace-separated tokens.
// This is the accounting used everywhere a "tokens generated" number is
// reported; backend-native counts are carried separately and never summed.
int whitespace_token_count(std::string_view text);

std::vector<std::string> whitespace_tokens(std::string_view text);

// Shared tokenizer for the lexical metrics: lowercase, then maximal runs of
// alphanumeric characters (punctuation separates and is dropped). The same
// tokens feed BLEU, ROUGE and METEOR so their scores are comparable.
std::vector<std::string> lexical_tokens(std::string_view text);

// Sentence segmentation for summary-level ROUGE-L: split on newlines and on
// sentence-final . ! ? followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view text);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Fixed-point decimal formatting ("%.Nf"); all report numbers go through this.
std::string format_fixed(double value, int decimals);

// Replaces every "{name}" for the names given; other brace text is left
// alone (problem statements may legitimately contain braces).
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace vinfer
