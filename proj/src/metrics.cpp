#include "vinfer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vinfer/common.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

namespace {

constexpr double kBleuEpsilon = 1e-9;

// ---------------------------------------------------------------------------
// Porter stemmer, following the published algorithm (no later extensions:
// step 2 maps abli->able and has no logi rule; short words are stemmed too).
// The word buffer is mutated in place; k is the last valid index, j marks the
// end of a candidate stem.

struct PorterState {
    std::string b;
    int k = 0;
    int j = 0;

    bool cons(int i) const {
        switch (b[static_cast<size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 ? true : !cons(i - 1);
            default: return true;
        }
    }

    // Measure of b[0..j]: the m in [C](VC)^m[V].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j; ++i) {
            if (!cons(i)) return true;
        }
        return false;
    }

    bool doublec(int i) const {
        if (i < 1) return false;
        if (b[static_cast<size_t>(i)] != b[static_cast<size_t>(i - 1)]) return false;
        return cons(i);
    }

    // consonant-vowel-consonant ending at i, last consonant not w, x or y;
    // triggers restoring a final e (e.g. cav(e), lov(e)).
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        char ch = b[static_cast<size_t>(i)];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(const char* s) {
        int len = static_cast<int>(std::char_traits<char>::length(s));
        if (len > k + 1) return false;
        if (b.compare(static_cast<size_t>(k - len + 1), static_cast<size_t>(len), s) != 0) {
            return false;
        }
        j = k - len;
        return true;
    }

    void set_to(const char* s) {
        b.replace(static_cast<size_t>(j + 1), std::string::npos, s);
        k = j + static_cast<int>(std::char_traits<char>::length(s));
    }

    void r(const char* s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (b[static_cast<size_t>(k)] == 's') {
            if (ends("sses")) {
                k -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (k == 0 || b[static_cast<size_t>(k - 1)] != 's') {
                --k;
            }
        }
        if (ends("eed")) {
            if (m() > 0) --k;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k = j;
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (doublec(k)) {
                --k;
                char ch = b[static_cast<size_t>(k)];
                if (ch == 'l' || ch == 's' || ch == 'z') ++k;
            } else if (m() == 1) {
                j = k;
                if (cvc(k)) set_to("e");
            }
        }
    }

    void step1c() {
        if (k < 0) return;
        if (ends("y") && vowel_in_stem()) b[static_cast<size_t>(k)] = 'i';
    }

    void step2() {
        if (k < 1) return;
        switch (b[static_cast<size_t>(k - 1)]) {
            case 'a':
                if (ends("ational")) { r("ate"); break; }
                if (ends("tional")) { r("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { r("ence"); break; }
                if (ends("anci")) { r("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { r("ize"); break; }
                break;
            case 'l':
                if (ends("abli")) { r("able"); break; }
                if (ends("alli")) { r("al"); break; }
                if (ends("entli")) { r("ent"); break; }
                if (ends("eli")) { r("e"); break; }
                if (ends("ousli")) { r("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { r("ize"); break; }
                if (ends("ation")) { r("ate"); break; }
                if (ends("ator")) { r("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { r("al"); break; }
                if (ends("iveness")) { r("ive"); break; }
                if (ends("fulness")) { r("ful"); break; }
                if (ends("ousness")) { r("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { r("al"); break; }
                if (ends("iviti")) { r("ive"); break; }
                if (ends("biliti")) { r("ble"); break; }
                break;
            default:
                break;
        }
    }

    void step3() {
        if (k < 0) return;
        switch (b[static_cast<size_t>(k)]) {
            case 'e':
                if (ends("icate")) { r("ic"); break; }
                if (ends("ative")) { r(""); break; }
                if (ends("alize")) { r("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { r("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { r("ic"); break; }
                if (ends("ful")) { r(""); break; }
                break;
            case 's':
                if (ends("ness")) { r(""); break; }
                break;
            default:
                break;
        }
    }

    void step4() {
        if (k < 1) return;
        switch (b[static_cast<size_t>(k - 1)]) {
            case 'a':
                if (ends("al")) break;
                return;
            case 'c':
                if (ends("ance")) break;
                if (ends("ence")) break;
                return;
            case 'e':
                if (ends("er")) break;
                return;
            case 'i':
                if (ends("ic")) break;
                return;
            case 'l':
                if (ends("able")) break;
                if (ends("ible")) break;
                return;
            case 'n':
                if (ends("ant")) break;
                if (ends("ement")) break;
                if (ends("ment")) break;
                if (ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j >= 0 &&
                    (b[static_cast<size_t>(j)] == 's' || b[static_cast<size_t>(j)] == 't')) {
                    break;
                }
                if (ends("ou")) break;
                return;
            case 's':
                if (ends("ism")) break;
                return;
            case 't':
                if (ends("ate")) break;
                if (ends("iti")) break;
                return;
            case 'u':
                if (ends("ous")) break;
                return;
            case 'v':
                if (ends("ive")) break;
                return;
            case 'z':
                if (ends("ize")) break;
                return;
            default:
                return;
        }
        if (m() > 1) k = j;
    }

    void step5() {
        if (k < 0) return;
        j = k;
        if (b[static_cast<size_t>(k)] == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(k - 1))) --k;
        }
        if (b[static_cast<size_t>(k)] == 'l' && doublec(k) && m() > 1) --k;
    }
};

// ---------------------------------------------------------------------------

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string gram;
        for (int d = 0; d < n; ++d) {
            if (d > 0) gram.push_back('\x1f');
            gram += tokens[i + d];
        }
        ++counts[gram];
    }
    return counts;
}

std::map<std::string, int> token_counts(const std::vector<std::string>& tokens) {
    std::map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

std::vector<std::string> require_reference_tokens(const std::string& reference) {
    auto tokens = lexical_tokens(reference);
    if (tokens.empty()) throw DataError("lexical metric reference has no tokens");
    return tokens;
}

double fmeasure(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// Indices of the reference tokens participating in one LCS with the
// candidate sentence, recovered by the conventional backtrack (ties step the
// reference index).
std::set<int> lcs_reference_indices(const std::vector<std::string>& ref,
                                    const std::vector<std::string>& cand) {
    size_t m = ref.size();
    size_t n = cand.size();
    std::vector<std::vector<int>> table(m + 1, std::vector<int>(n + 1, 0));
    for (size_t i = 1; i <= m; ++i) {
        for (size_t k = 1; k <= n; ++k) {
            table[i][k] = ref[i - 1] == cand[k - 1]
                              ? table[i - 1][k - 1] + 1
                              : std::max(table[i - 1][k], table[i][k - 1]);
        }
    }
    std::set<int> indices;
    size_t i = m;
    size_t k = n;
    while (i > 0 && k > 0) {
        if (ref[i - 1] == cand[k - 1]) {
            indices.insert(static_cast<int>(i - 1));
            --i;
            --k;
        } else if (table[i][k - 1] > table[i - 1][k]) {
            --k;
        } else {
            --i;
        }
    }
    return indices;
}

std::vector<std::vector<std::string>> tokenized_sentences(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    for (const auto& sentence : split_sentences(text)) {
        auto tokens = lexical_tokens(sentence);
        if (!tokens.empty()) out.push_back(std::move(tokens));
    }
    return out;
}

struct EnumToken {
    int index;
    std::string key;
};

// One alignment stage: walk both lists back to front, pair each remaining
// hypothesis token with the last remaining reference token sharing its key.
void align_stage(std::vector<EnumToken>& hyp, std::vector<EnumToken>& ref,
                 std::vector<std::pair<int, int>>& matches) {
    for (int i = static_cast<int>(hyp.size()) - 1; i >= 0; --i) {
        for (int j = static_cast<int>(ref.size()) - 1; j >= 0; --j) {
            if (hyp[static_cast<size_t>(i)].key == ref[static_cast<size_t>(j)].key) {
                matches.emplace_back(hyp[static_cast<size_t>(i)].index,
                                     ref[static_cast<size_t>(j)].index);
                hyp.erase(hyp.begin() + i);
                ref.erase(ref.begin() + j);
                break;
            }
        }
    }
}

}  // namespace

std::string porter_stem(const std::string& word) {
    if (word.empty()) return word;
    PorterState s;
    s.b = word;
    s.k = static_cast<int>(word.size()) - 1;
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    s.b.resize(static_cast<size_t>(s.k + 1));
    return s.b;
}

double bleu4(const std::string& candidate, const std::string& reference) {
    auto ref = require_reference_tokens(reference);
    auto cand = lexical_tokens(candidate);
    if (cand.empty()) return 0.0;

    double log_sum = 0.0;
    for (int n = 1; n <= 4; ++n) {
        auto cand_grams = ngram_counts(cand, n);
        auto ref_grams = ngram_counts(ref, n);
        long long total = std::max<long long>(0, static_cast<long long>(cand.size()) - n + 1);
        long long clipped = 0;
        for (const auto& [gram, count] : cand_grams) {
            auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) clipped += std::min(count, it->second);
        }
        double precision;
        if (total == 0) {
            precision = kBleuEpsilon;
        } else if (clipped == 0) {
            precision = kBleuEpsilon / static_cast<double>(total);
        } else {
            precision = static_cast<double>(clipped) / static_cast<double>(total);
        }
        log_sum += 0.25 * std::log(precision);
    }
    double bp = cand.size() >= ref.size()
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(ref.size()) /
                                         static_cast<double>(cand.size()));
    return bp * std::exp(log_sum);
}

double rouge1(const std::string& candidate, const std::string& reference) {
    auto ref = require_reference_tokens(reference);
    auto cand = lexical_tokens(candidate);
    if (cand.empty()) return 0.0;
    auto ref_counts = token_counts(ref);
    auto cand_counts = token_counts(cand);
    long long overlap = 0;
    for (const auto& [token, count] : cand_counts) {
        auto it = ref_counts.find(token);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return fmeasure(precision, recall);
}

double rouge_lsum(const std::string& candidate, const std::string& reference) {
    require_reference_tokens(reference);
    auto ref_sents = tokenized_sentences(reference);
    auto cand_sents = tokenized_sentences(candidate);
    size_t m = 0;
    for (const auto& s : ref_sents) m += s.size();
    size_t n = 0;
    for (const auto& s : cand_sents) n += s.size();
    if (m == 0) throw DataError("lexical metric reference has no tokens");
    if (n == 0) return 0.0;

    std::map<std::string, int> ref_budget;
    for (const auto& s : ref_sents) {
        for (const auto& t : s) ++ref_budget[t];
    }
    std::map<std::string, int> cand_budget;
    for (const auto& s : cand_sents) {
        for (const auto& t : s) ++cand_budget[t];
    }

    long long hits = 0;
    for (const auto& ref_sent : ref_sents) {
        std::set<int> union_indices;
        for (const auto& cand_sent : cand_sents) {
            auto indices = lcs_reference_indices(ref_sent, cand_sent);
            union_indices.insert(indices.begin(), indices.end());
        }
        for (int idx : union_indices) {
            const std::string& t = ref_sent[static_cast<size_t>(idx)];
            if (cand_budget[t] > 0 && ref_budget[t] > 0) {
                ++hits;
                --cand_budget[t];
                --ref_budget[t];
            }
        }
    }
    double recall = static_cast<double>(hits) / static_cast<double>(m);
    double precision = static_cast<double>(hits) / static_cast<double>(n);
    return fmeasure(precision, recall);
}

double meteor(const std::string& candidate, const std::string& reference) {
    auto ref_tokens = require_reference_tokens(reference);
    auto hyp_tokens = lexical_tokens(candidate);
    if (hyp_tokens.empty()) return 0.0;

    std::vector<EnumToken> hyp;
    std::vector<EnumToken> ref;
    for (size_t i = 0; i < hyp_tokens.size(); ++i) {
        hyp.push_back({static_cast<int>(i), hyp_tokens[i]});
    }
    for (size_t i = 0; i < ref_tokens.size(); ++i) {
        ref.push_back({static_cast<int>(i), ref_tokens[i]});
    }

    std::vector<std::pair<int, int>> matches;
    align_stage(hyp, ref, matches);
    for (auto& t : hyp) t.key = porter_stem(hyp_tokens[static_cast<size_t>(t.index)]);
    for (auto& t : ref) t.key = porter_stem(ref_tokens[static_cast<size_t>(t.index)]);
    align_stage(hyp, ref, matches);
    std::sort(matches.begin(), matches.end());

    auto match_count = static_cast<double>(matches.size());
    if (matches.empty()) return 0.0;
    double precision = match_count / static_cast<double>(hyp_tokens.size());
    double recall = match_count / static_cast<double>(ref_tokens.size());
    double denom = 0.9 * precision + 0.1 * recall;
    if (denom == 0.0) return 0.0;
    double fmean = precision * recall / denom;

    int chunks = 1;
    for (size_t i = 0; i + 1 < matches.size(); ++i) {
        if (!(matches[i + 1].first == matches[i].first + 1 &&
              matches[i + 1].second == matches[i].second + 1)) {
            ++chunks;
        }
    }
    double frag = static_cast<double>(chunks) / match_count;
    double penalty = 0.5 * frag * frag * frag;
    return (1.0 - penalty) * fmean;
}

LexicalScores score_pair(const std::string& candidate, const std::string& reference) {
    LexicalScores scores;
    scores.bleu4 = bleu4(candidate, reference);
    scores.rouge1 = rouge1(candidate, reference);
    scores.rouge_lsum = rouge_lsum(candidate, reference);
    scores.meteor = meteor(candidate, reference);
    return scores;
}

BatchScores score_batch(const std::vector<CandidateRef>& pairs) {
    if (pairs.empty()) throw DataError("no candidate/reference pairs to score");
    BatchScores batch;
    for (const auto& pair : pairs) {
        batch.rows.push_back({pair.id, score_pair(pair.candidate, pair.reference)});
        batch.mean.bleu4 += batch.rows.back().scores.bleu4;
        batch.mean.rouge1 += batch.rows.back().scores.rouge1;
        batch.mean.rouge_lsum += batch.rows.back().scores.rouge_lsum;
        batch.mean.meteor += batch.rows.back().scores.meteor;
    }
    auto n = static_cast<double>(batch.rows.size());
    batch.mean.bleu4 /= n;
    batch.mean.rouge1 /= n;
    batch.mean.rouge_lsum /= n;
    batch.mean.meteor /= n;
    return batch;
}

}  // namespace vinfer
