#include "vinfer/answers.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "vinfer/common.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

// Case-insensitive search returning the offset just past the LAST occurrence
// of needle, or npos.
size_t find_last_marker_end(const std::string& text, const std::string& needle) {
    std::string lower_text = to_lower(text);
    std::string lower_needle = to_lower(needle);
    size_t pos = lower_text.rfind(lower_needle);
    if (pos == std::string::npos) return std::string::npos;
    return pos + lower_needle.size();
}

// Does a "pi" token start at i? Either the UTF-8 pi character or the
// standalone word "pi". Returns the end offset, or 0 when absent.
size_t pi_token_end(const std::string& s, size_t i) {
    if (i + 1 < s.size() && static_cast<unsigned char>(s[i]) == 0xcf &&
        static_cast<unsigned char>(s[i + 1]) == 0x80) {
        return i + 2;
    }
    if (i + 1 < s.size() && (s[i] == 'p' || s[i] == 'P') && (s[i + 1] == 'i' || s[i + 1] == 'I')) {
        // A digit on the left is a coefficient (2pi); a letter is a word.
        bool left_ok = (i == 0) || !is_alnum(s[i - 1]) || is_digit(s[i - 1]);
        bool right_ok = (i + 2 >= s.size()) || !is_alnum(s[i + 2]);
        if (left_ok && right_ok) return i + 2;
    }
    return 0;
}

bool plain_number_at(const std::string& s, size_t i, double* value, size_t* end) {
    bool starts = is_digit(s[i]) ||
                  ((s[i] == '.' || s[i] == '-') && i + 1 < s.size() && is_digit(s[i + 1]));
    if (!starts) return false;
    if (i > 0 && is_alnum(s[i - 1])) return false;
    // Reject hex so strtod cannot swallow "0x..".
    if (s[i] == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        *value = 0.0;
        *end = i + 1;
        return true;
    }
    const char* begin = s.c_str() + i;
    char* parse_end = nullptr;
    double v = std::strtod(begin, &parse_end);
    if (parse_end == begin || !std::isfinite(v)) return false;
    *value = v;
    *end = i + static_cast<size_t>(parse_end - begin);
    return true;
}

size_t skip_spaces(const std::string& s, size_t i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return i;
}

// Parses one numeric term starting at i: a number, a fraction a/b, a
// multiple of pi (2pi/3, pi/2, 3pi, pi), in any mix. Returns false when no
// term starts here.
bool numeric_term_at(const std::string& s, size_t i, double* value, size_t* end) {
    double v = 0.0;
    size_t j = 0;
    if (size_t pe = pi_token_end(s, i); pe != 0) {
        v = kPi;
        j = pe;
    } else if (plain_number_at(s, i, &v, &j)) {
        size_t k = skip_spaces(s, j);
        if (size_t pe = pi_token_end(s, k); pe != 0) {
            v *= kPi;
            j = pe;
        }
    } else {
        return false;
    }
    size_t k = skip_spaces(s, j);
    if (k < s.size() && s[k] == '/') {
        k = skip_spaces(s, k + 1);
        double denom = 0.0;
        size_t de = 0;
        if (k < s.size() && plain_number_at(s, k, &denom, &de) && denom != 0.0) {
            v /= denom;
            j = de;
        }
    }
    *value = v;
    *end = j;
    return true;
}

std::optional<double> last_numeric(const std::string& s) {
    std::optional<double> found;
    size_t i = 0;
    while (i < s.size()) {
        double v = 0.0;
        size_t end = 0;
        if (numeric_term_at(s, i, &v, &end)) {
            found = v;
            i = end;
        } else {
            ++i;
        }
    }
    return found;
}

// Last standalone choice letter A..E. Lowercase letters only count when the
// caller knows a choice is expected; "a" is too common as an article.
std::optional<char> last_choice_letter(const std::string& s, bool allow_lowercase) {
    std::optional<char> found;
    size_t i = 0;
    while (i < s.size()) {
        if (!is_alnum(s[i])) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < s.size() && is_alnum(s[j])) ++j;
        if (j - i == 1) {
            char c = s[i];
            if (c >= 'A' && c <= 'E') found = c;
            if (allow_lowercase && c >= 'a' && c <= 'e') found = static_cast<char>(c - 'a' + 'A');
        }
        i = j;
    }
    return found;
}

std::string canonical_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "0";
    return std::string(buf, end);
}

std::string canonical_text(std::string_view s) {
    std::string out = to_lower(collapse_whitespace(s));
    while (!out.empty() && out.back() == '.') out.pop_back();
    return trim(out);
}

NormalizedAnswer make_choice(char letter) {
    NormalizedAnswer a;
    a.kind = NormalizedKind::choice;
    a.canonical = std::string(1, letter);
    return a;
}

NormalizedAnswer make_numeric(double v) {
    NormalizedAnswer a;
    a.kind = NormalizedKind::numeric;
    a.canonical = canonical_number(v);
    // Re-parse the canonical form so canonical and value stay a fixed point.
    a.numeric_value = std::strtod(a.canonical.c_str(), nullptr);
    return a;
}

NormalizedAnswer make_text(const std::string& payload) {
    NormalizedAnswer a;
    std::string canon = canonical_text(payload);
    if (canon.empty()) return a;
    a.kind = NormalizedKind::text;
    a.canonical = canon;
    return a;
}

NormalizedAnswer extract(const std::string& payload, KindHint hint) {
    NormalizedAnswer unparsed;
    switch (hint) {
        case KindHint::choice: {
            auto letter = last_choice_letter(payload, true);
            return letter ? make_choice(*letter) : unparsed;
        }
        case KindHint::numeric: {
            auto v = last_numeric(payload);
            return v ? make_numeric(*v) : unparsed;
        }
        case KindHint::text:
            return make_text(payload);
        case KindHint::none: {
            if (auto letter = last_choice_letter(payload, false)) return make_choice(*letter);
            if (auto v = last_numeric(payload)) return make_numeric(*v);
            return make_text(payload);
        }
    }
    return unparsed;
}

}  // namespace

std::string to_string(NormalizedKind k) {
    switch (k) {
        case NormalizedKind::choice: return "choice";
        case NormalizedKind::numeric: return "numeric";
        case NormalizedKind::text: return "text";
        case NormalizedKind::unparsed: return "unparsed";
    }
    throw DataError("unknown normalized kind enum value");
}

KindHint hint_for(const AnswerKey& gold) {
    switch (gold.kind) {
        case AnswerKind::choice: return KindHint::choice;
        case AnswerKind::numeric: return KindHint::numeric;
        case AnswerKind::text: return KindHint::text;
    }
    return KindHint::none;
}

NormalizedAnswer normalize_answer(const std::string& raw, KindHint hint) {
    std::string payload;
    size_t best_end = std::string::npos;
    for (const char* marker : {"answer:", "the answer is"}) {
        size_t end = find_last_marker_end(raw, marker);
        if (end != std::string::npos && (best_end == std::string::npos || end > best_end)) {
            best_end = end;
        }
    }
    if (best_end != std::string::npos) {
        size_t eol = raw.find('\n', best_end);
        payload = trim(raw.substr(best_end, eol == std::string::npos ? std::string::npos
                                                                     : eol - best_end));
    }
    if (!payload.empty()) {
        NormalizedAnswer from_marker = extract(payload, hint);
        if (from_marker.kind != NormalizedKind::unparsed) return from_marker;
    }
    return extract(raw, hint);
}

bool match_answer(const NormalizedAnswer& pred, const AnswerKey& gold, double tol) {
    if (pred.kind == NormalizedKind::unparsed) return false;
    if (tol < 0.0) tol = 0.0;
    switch (gold.kind) {
        case AnswerKind::choice:
            return pred.kind == NormalizedKind::choice && pred.canonical == gold.value;
        case AnswerKind::numeric: {
            if (pred.kind != NormalizedKind::numeric || !pred.numeric_value.has_value() ||
                !gold.numeric_value.has_value()) {
                return false;
            }
            double p = *pred.numeric_value;
            double g = *gold.numeric_value;
            return std::fabs(p - g) <= tol * std::max(1.0, std::fabs(g));
        }
        case AnswerKind::text:
            return canonical_text(pred.canonical) == canonical_text(gold.value);
    }
    return false;
}

bool match_raw_answer(const std::string& raw, const AnswerKey& gold, double tol) {
    return match_answer(normalize_answer(raw, hint_for(gold)), gold, tol);
}

const std::string& default_judge_template() {
    static const std::string tmpl =
        "You compare a model response against the reference answer.\n"
        "Model response:\n{response}\n"
        "Reference answer: {gold}\n"
        "Does the response's final answer match the reference? "
        "Reply with exactly one word: answer EXACT_MATCH or NO_MATCH.\n";
    return tmpl;
}

std::string judge_prompt(const std::string& raw_response, const AnswerKey& gold,
                         const std::string& template_text) {
    std::string out = template_text;
    auto replace_all = [&out](const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all("{response}", raw_response);
    replace_all("{gold}", gold.value);
    return out;
}

std::optional<bool> parse_judge_reply(const std::string& reply) {
    std::string lower = to_lower(reply);
    size_t exact = lower.rfind("exact_match");
    size_t no = lower.rfind("no_match");
    if (exact == std::string::npos && no == std::string::npos) return std::nullopt;
    if (exact == std::string::npos) return false;
    if (no == std::string::npos) return true;
    return exact > no;
}

JudgeVerdict judge_match(const std::string& raw_response, const AnswerKey& gold,
                         const JudgeInvoker& invoke, double tol,
                         const std::string& template_text) {
    JudgeVerdict verdict;
    try {
        std::string reply = invoke(judge_prompt(raw_response, gold, template_text));
        if (auto parsed = parse_judge_reply(reply)) {
            verdict.matched = *parsed;
            return verdict;
        }
    } catch (const std::exception&) {
        // Judge unavailable; resolved below.
    }
    verdict.used_fallback = true;
    verdict.matched = match_raw_answer(raw_response, gold, tol);
    return verdict;
}

JudgeAgreement judge_agreement(const std::vector<std::pair<std::string, AnswerKey>>& items,
                               const JudgeInvoker& invoke, double tol) {
    JudgeAgreement agg;
    for (const auto& [raw, gold] : items) {
        bool rule = match_raw_answer(raw, gold, tol);
        JudgeVerdict jv = judge_match(raw, gold, invoke, tol);
        ++agg.n;
        if (jv.used_fallback) ++agg.judge_fallbacks;
        if (jv.matched == rule) ++agg.agree;
    }
    agg.rate = agg.n == 0 ? 0.0 : static_cast<double>(agg.agree) / agg.n;
    return agg;
}

}  // namespace vinfer
