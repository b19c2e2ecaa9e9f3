#pragma once

#include <string>

#include "vinfer/corpus.hpp"

namespace vinfer {

struct VariantInstance {
    std::string problem_id;
    Setting setting = Setting::TextDominant;
    std::string text;
    std::string image;
    std::string choices_rendered;
};

// One-line choices block: "Choices: A: ... B: ...". Empty when there are no
// choices.
std::string render_choices(const ProblemRecord& problem);

// Composes the per-setting question text and selects the matching image.
// Component retention: TextDominant d+i+e, TextLite i+e, VisionIntensive e,
// VisionDominant i, VisionOnly none. Nonempty pieces join with single
// newlines; the choices block is appended except under VisionOnly.
VariantInstance compose_variant(const ProblemRecord& problem, Setting setting);

// Full text-only form (d+i+e+choices, no image). This is the enrichment
// payload; it is never an evaluation setting of its own.
std::string compose_text_only(const ProblemRecord& problem);

}  // namespace vinfer
