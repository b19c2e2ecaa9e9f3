#include "vinfer/variants.hpp"

#include "vinfer/common.hpp"

namespace vinfer {

namespace {

std::string join_components(std::initializer_list<const std::string*> parts) {
    std::string out;
    for (const auto* part : parts) {
        if (part->empty()) continue;
        if (!out.empty()) out.push_back('\n');
        out += *part;
    }
    return out;
}

}  // namespace

std::string render_choices(const ProblemRecord& problem) {
    if (problem.choices.empty()) return "";
    std::string out = "Choices:";
    for (const auto& c : problem.choices) {
        out += " " + c.label + ": " + c.text;
    }
    return out;
}

VariantInstance compose_variant(const ProblemRecord& problem, Setting setting) {
    VariantInstance v;
    v.problem_id = problem.id;
    v.setting = setting;
    v.choices_rendered = render_choices(problem);

    std::string body;
    switch (setting) {
        case Setting::TextDominant:
            body = join_components({&problem.descriptive, &problem.implicit, &problem.essential});
            v.image = problem.image_base;
            break;
        case Setting::TextLite:
            body = join_components({&problem.implicit, &problem.essential});
            v.image = problem.image_base;
            break;
        case Setting::VisionIntensive:
            body = join_components({&problem.essential});
            v.image = problem.image_base;
            break;
        case Setting::VisionDominant:
            body = join_components({&problem.implicit});
            v.image = problem.image_dominant;
            break;
        case Setting::VisionOnly:
            v.image = problem.image_only;
            v.text = "";
            v.choices_rendered = "";
            return v;
    }
    v.text = body;
    if (!v.choices_rendered.empty()) {
        if (!v.text.empty()) v.text.push_back('\n');
        v.text += v.choices_rendered;
    }
    return v;
}

std::string compose_text_only(const ProblemRecord& problem) {
    if (problem.descriptive.empty() && problem.implicit.empty() && problem.essential.empty()) {
        throw DataError("record \"" + problem.id +
                        "\": all text components empty; nothing to enrich with");
    }
    std::string text =
        join_components({&problem.descriptive, &problem.implicit, &problem.essential});
    std::string choices = render_choices(problem);
    if (!choices.empty()) {
        text.push_back('\n');
        text += choices;
    }
    return text;
}

}  // namespace vinfer
