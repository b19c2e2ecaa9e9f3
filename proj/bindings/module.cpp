#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "vinfer/answers.hpp"
#include "vinfer/common.hpp"
#include "vinfer/corpus.hpp"
#include "vinfer/metrics.hpp"
#include "vinfer/stats.hpp"
#include "vinfer/variants.hpp"

namespace py = pybind11;
using namespace vinfer;

namespace {

KindHint hint_from_name(const std::string& name) {
    if (name == "none") return KindHint::none;
    if (name == "choice") return KindHint::choice;
    if (name == "numeric") return KindHint::numeric;
    if (name == "text") return KindHint::text;
    throw UsageError("unknown answer hint \"" + name + "\"");
}

AnswerKey key_from_args(const std::string& kind, const std::string& value,
                        std::optional<double> numeric_value) {
    AnswerKey key;
    key.kind = answer_kind_from_string(kind);
    key.value = value;
    key.numeric_value = numeric_value;
    return key;
}

ProblemRecord record_from_text(const std::string& record_json) {
    return record_from_json(nlohmann::json::parse(record_json), "record");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Scoring, statistics, and prompt-composition core";

    m.def(
        "score_pair",
        [](const std::string& candidate, const std::string& reference) {
            LexicalScores s = score_pair(candidate, reference);
            py::dict d;
            d["bleu4"] = s.bleu4;
            d["rouge1"] = s.rouge1;
            d["rouge_lsum"] = s.rouge_lsum;
            d["meteor"] = s.meteor;
            return d;
        },
        py::arg("candidate"), py::arg("reference"),
        "Lexical overlap scores of a candidate against a reference.");

    m.def("porter_stem", &porter_stem, py::arg("word"), "Porter stem of one lowercase word.");

    m.def(
        "mann_whitney",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            MWUResult r = mann_whitney_one_tailed(x, y);
            py::dict d;
            d["u"] = r.u_statistic;
            d["p_one_tailed"] = r.p_one_tailed;
            d["method"] = to_string(r.method);
            return d;
        },
        py::arg("x"), py::arg("y"),
        "One-tailed Mann-Whitney U test for x stochastically greater than y.");

    m.def(
        "normalize_answer",
        [](const std::string& raw, const std::string& hint) {
            NormalizedAnswer a = normalize_answer(raw, hint_from_name(hint));
            py::dict d;
            d["kind"] = to_string(a.kind);
            d["canonical"] = a.canonical;
            if (a.numeric_value.has_value()) {
                d["numeric_value"] = *a.numeric_value;
            } else {
                d["numeric_value"] = py::none();
            }
            return d;
        },
        py::arg("raw"), py::arg("hint") = "none",
        "Extracts and canonicalizes the final answer from free-form output.");

    m.def(
        "match_answer",
        [](const std::string& raw, const std::string& gold_kind, const std::string& gold_value,
           std::optional<double> numeric_value, double tol) {
            return match_raw_answer(raw, key_from_args(gold_kind, gold_value, numeric_value), tol);
        },
        py::arg("raw"), py::arg("gold_kind"), py::arg("gold_value"),
        py::arg("numeric_value") = std::nullopt, py::arg("tol") = kDefaultNumericTol,
        "Whether the extracted answer matches the gold key.");

    m.def(
        "compose_variant",
        [](const std::string& record_json, const std::string& setting) {
            VariantInstance v =
                compose_variant(record_from_text(record_json), setting_from_string(setting));
            py::dict d;
            d["text"] = v.text;
            d["image"] = v.image;
            d["choices_rendered"] = v.choices_rendered;
            return d;
        },
        py::arg("record_json"), py::arg("setting"),
        "Per-setting question text and image selection for one problem record.");

    m.def(
        "compose_text_only",
        [](const std::string& record_json) { return compose_text_only(record_from_text(record_json)); },
        py::arg("record_json"), "Full text-only composition of one problem record.");

    m.def(
        "aggregate_likert",
        [](const std::vector<int>& scores) {
            LikertSummary summary = aggregate_likert(scores);
            py::dict d;
            d["n"] = summary.n;
            d["mean"] = summary.mean;
            d["std_dev"] = summary.std_dev;
            d["formatted"] = summary.formatted();
            return d;
        },
        py::arg("scores"), "Mean and population spread of 0..5 ratings.");

    m.def(
        "flip_ratio",
        [](int improvements, int degradations) {
            FlipStats flips;
            flips.improvements = improvements;
            flips.degradations = degradations;
            if (degradations > 0) {
                flips.ratio = static_cast<double>(improvements) / degradations;
            }
            return flips.formatted_ratio();
        },
        py::arg("improvements"), py::arg("degradations"),
        "Improvement-to-degradation ratio formatted to two decimals.");

    m.def(
        "settings",
        [] {
            std::vector<std::string> names;
            for (Setting s : all_settings()) names.push_back(to_string(s));
            return names;
        },
        "The five evaluation settings in canonical order.");
}
