#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "vinfer/corpus.hpp"
#include "vinfer/textutil.hpp"
#include "vinfer/variants.hpp"

using namespace vinfer;

namespace {

ProblemRecord sample_problem() {
    ProblemRecord rec;
    rec.id = "q1";
    rec.subject = Subject::geometry2d;
    rec.descriptive = "Triangle ABC is drawn with AB = 5.";
    rec.implicit = "Angle B is a right angle.";
    rec.essential = "Find the length of AC.";
    rec.choices = {{"A", "5"}, {"B", "13"}, {"C", "12"}};
    rec.gold = {AnswerKind::choice, "B", std::nullopt};
    rec.image_base = "images/q1_base.png";
    rec.image_dominant = "images/q1_dom.png";
    rec.image_only = "images/q1_only.png";
    return rec;
}

std::map<std::string, int> token_multiset(const std::string& text) {
    std::map<std::string, int> counts;
    for (const auto& tok : lexical_tokens(text)) ++counts[tok];
    return counts;
}

bool multiset_contains(const std::map<std::string, int>& small,
                       const std::map<std::string, int>& big) {
    for (const auto& [tok, n] : small) {
        auto it = big.find(tok);
        if (it == big.end() || it->second < n) return false;
    }
    return true;
}

std::string random_words(std::mt19937_64& rng, int lo, int hi) {
    static const char* vocab[] = {"angle",  "side",   "circle", "radius", "prism",
                                  "vertex", "equals", "twice",  "sum",    "shaded"};
    std::uniform_int_distribution<int> count(lo, hi);
    std::uniform_int_distribution<int> pick(0, 9);
    std::uniform_int_distribution<int> num(1, 99);
    int n = count(rng);
    std::ostringstream out;
    for (int i = 0; i < n; ++i) {
        if (i) out << ' ';
        if (pick(rng) < 2) out << num(rng);
        else out << vocab[pick(rng)];
    }
    return out.str();
}

ProblemRecord random_problem(std::mt19937_64& rng, int index) {
    ProblemRecord rec;
    rec.id = "r" + std::to_string(index);
    rec.subject = (index % 2) ? Subject::geometry3d : Subject::geometry2d;
    std::uniform_int_distribution<int> coin(0, 9);
    rec.descriptive = coin(rng) == 0 ? "" : random_words(rng, 3, 12);
    rec.implicit = random_words(rng, 2, 10);
    rec.essential = random_words(rng, 2, 10);
    if (coin(rng) < 5) {
        rec.choices = {{"A", random_words(rng, 1, 2)}, {"B", random_words(rng, 1, 2)}};
        rec.gold = {AnswerKind::choice, "A", std::nullopt};
    } else {
        rec.gold = {AnswerKind::text, "parallel", std::nullopt};
    }
    rec.image_base = "images/a.png";
    rec.image_dominant = "images/b.png";
    rec.image_only = "images/c.png";
    return rec;
}

}  // namespace

TEST_CASE("choices render on one line, empty when absent") {
    ProblemRecord rec = sample_problem();
    CHECK(render_choices(rec) == "Choices: A: 5 B: 13 C: 12");
    rec.choices.clear();
    rec.gold = {AnswerKind::text, "x", std::nullopt};
    CHECK(render_choices(rec).empty());
}

TEST_CASE("composition retains the documented components per setting") {
    ProblemRecord rec = sample_problem();

    VariantInstance td = compose_variant(rec, Setting::TextDominant);
    CHECK(td.text == "Triangle ABC is drawn with AB = 5.\nAngle B is a right angle.\n"
                     "Find the length of AC.\nChoices: A: 5 B: 13 C: 12");
    CHECK(td.image == rec.image_base);

    VariantInstance tl = compose_variant(rec, Setting::TextLite);
    CHECK(tl.text == "Angle B is a right angle.\nFind the length of AC.\n"
                     "Choices: A: 5 B: 13 C: 12");
    CHECK(tl.image == rec.image_base);

    VariantInstance vi = compose_variant(rec, Setting::VisionIntensive);
    CHECK(vi.text == "Find the length of AC.\nChoices: A: 5 B: 13 C: 12");
    CHECK(vi.image == rec.image_base);

    VariantInstance vd = compose_variant(rec, Setting::VisionDominant);
    CHECK(vd.text == "Angle B is a right angle.\nChoices: A: 5 B: 13 C: 12");
    CHECK(vd.image == rec.image_dominant);

    VariantInstance vo = compose_variant(rec, Setting::VisionOnly);
    CHECK(vo.text.empty());
    CHECK(vo.image == rec.image_only);
}

TEST_CASE("empty components never leave blank lines") {
    ProblemRecord rec = sample_problem();
    rec.descriptive = "";
    VariantInstance td = compose_variant(rec, Setting::TextDominant);
    CHECK(td.text.substr(0, 7) == "Angle B");
    CHECK(td.text.find("\n\n") == std::string::npos);
}

TEST_CASE("text-only form carries every component and the choices") {
    ProblemRecord rec = sample_problem();
    std::string full = compose_text_only(rec);
    CHECK(full.find(rec.descriptive) != std::string::npos);
    CHECK(full.find(rec.implicit) != std::string::npos);
    CHECK(full.find(rec.essential) != std::string::npos);
    CHECK(full.find("Choices:") != std::string::npos);
}

TEST_CASE("token multisets nest along the reduction order on random problems") {
    std::mt19937_64 rng(20240817);
    for (int i = 0; i < 100; ++i) {
        ProblemRecord rec = random_problem(rng, i);
        auto td = token_multiset(compose_variant(rec, Setting::TextDominant).text);
        auto tl = token_multiset(compose_variant(rec, Setting::TextLite).text);
        auto vi = token_multiset(compose_variant(rec, Setting::VisionIntensive).text);
        VariantInstance vo = compose_variant(rec, Setting::VisionOnly);
        REQUIRE(multiset_contains(vi, tl));
        REQUIRE(multiset_contains(tl, td));
        REQUIRE(vo.text.empty());
    }
}
