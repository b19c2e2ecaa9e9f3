#!/usr/bin/env python3
"""Reference implementation of the lexical metric stack, written only from
the published algorithm descriptions (Porter 1980; BLEU; ROUGE-1/ROUGE-LSum
summary-level union-LCS; METEOR exact+stem alignment). It deliberately uses
flat rule tables and regex tokenization so it shares no structure with the
C++ code it checks. Run once to freeze tests/fixtures/lexical_oracle.json.
"""

import json
import math
import re
import sys
from collections import Counter
from pathlib import Path

# ---------------------------------------------------------------- tokenizer

TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def tokenize(text):
    return [t.lower() for t in TOKEN_RE.findall(text)]


def sentences(text):
    parts = re.split(r"(?<=[.!?])(?=\s|$)|\n", text)
    return [p.strip() for p in parts if p is not None and p.strip()]


def tokenized_sentences(text):
    out = []
    for s in sentences(text):
        toks = tokenize(s)
        if toks:
            out.append(toks)
    return out


# ------------------------------------------------------------------- porter

VOWELS = "aeiou"


def _is_cons(word, i):
    ch = word[i]
    if ch in VOWELS:
        return False
    if ch == "y":
        return True if i == 0 else not _is_cons(word, i - 1)
    return True


def _cv(word):
    out = []
    for i in range(len(word)):
        t = "c" if _is_cons(word, i) else "v"
        if not out or out[-1] != t:
            out.append(t)
    return "".join(out)


def _measure(stem):
    return _cv(stem).count("vc")


def _has_vowel(stem):
    return "v" in _cv(stem)


def _double_cons(word):
    return len(word) >= 2 and word[-1] == word[-2] and _is_cons(word, len(word) - 1)


def _ends_cvc(word):
    if len(word) < 3:
        return False
    n = len(word)
    if not (_is_cons(word, n - 3) and not _is_cons(word, n - 2) and _is_cons(word, n - 1)):
        return False
    return word[-1] not in "wxy"


def _longest_rule(word, rules):
    best = None
    for suffix, replacement, condition in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, replacement, condition)
    return best


def _apply_table(word, rules):
    """Longest matching suffix selects the rule; a failed condition means no
    other rule in the step is tried."""
    best = _longest_rule(word, rules)
    if best is None:
        return word
    suffix, replacement, condition = best
    stem = word[: len(word) - len(suffix)]
    if condition is None or condition(stem):
        return stem + replacement
    return word


STEP1A = [
    ("sses", "ss", None),
    ("ies", "i", None),
    ("ss", "ss", None),
    ("s", "", None),
]

_m_pos = lambda stem: _measure(stem) > 0
_m_gt1 = lambda stem: _measure(stem) > 1

STEP2 = [(s, r, _m_pos) for s, r in [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]]

STEP3 = [(s, r, _m_pos) for s, r in [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]]

STEP4 = [(s, "", _m_gt1) for s in [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]] + [("ion", "", lambda stem: _m_gt1(stem) and stem[-1:] in ("s", "t"))]


def _step1b(word):
    rule = _longest_rule(word, [("eed", None, None), ("ed", None, None), ("ing", None, None)])
    if rule is None:
        return word
    suffix = rule[0]
    stem = word[: len(word) - len(suffix)]
    if suffix == "eed":
        return stem + "ee" if _measure(stem) > 0 else word
    if not _has_vowel(stem):
        return word
    word = stem
    if word.endswith(("at", "bl", "iz")):
        return word + "e"
    if _double_cons(word) and word[-1] not in "lsz":
        return word[:-1]
    if _measure(word) == 1 and _ends_cvc(word):
        return word + "e"
    return word


def _step1c(word):
    if word.endswith("y") and _has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _step5(word):
    if word.endswith("e"):
        a = _measure(word[:-1])
        if a > 1 or (a == 1 and not _ends_cvc(word[:-1])):
            word = word[:-1]
    if word.endswith("l") and _double_cons(word) and _measure(word) > 1:
        word = word[:-1]
    return word


def porter(word):
    if not word:
        return word
    word = _apply_table(word, STEP1A)
    word = _step1b(word)
    word = _step1c(word)
    word = _apply_table(word, STEP2)
    word = _apply_table(word, STEP3)
    word = _apply_table(word, STEP4)
    return _step5(word)


def _self_check_porter():
    """Per-step examples from the published algorithm description."""
    cases = {
        "step1a": (lambda w: _apply_table(w, STEP1A), [
            ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"),
            ("caress", "caress"), ("cats", "cat"),
        ]),
        "step1b": (_step1b, [
            ("feed", "feed"), ("agreed", "agree"), ("plastered", "plaster"),
            ("bled", "bled"), ("motoring", "motor"), ("sing", "sing"),
            ("conflated", "conflate"), ("troubled", "trouble"), ("sized", "size"),
            ("hopping", "hop"), ("tanned", "tan"), ("falling", "fall"),
            ("hissing", "hiss"), ("fizzed", "fizz"), ("failing", "fail"),
            ("filing", "file"),
        ]),
        "step1c": (_step1c, [("happy", "happi"), ("sky", "sky")]),
        "step2": (lambda w: _apply_table(w, STEP2), [
            ("relational", "relate"), ("conditional", "condition"),
            ("rational", "rational"), ("valenci", "valence"),
            ("hesitanci", "hesitance"), ("digitizer", "digitize"),
            ("conformabli", "conformable"), ("radicalli", "radical"),
            ("differentli", "different"), ("vileli", "vile"),
            ("analogousli", "analogous"), ("vietnamization", "vietnamize"),
            ("predication", "predicate"), ("operator", "operate"),
            ("feudalism", "feudal"), ("decisiveness", "decisive"),
            ("hopefulness", "hopeful"), ("callousness", "callous"),
            ("formaliti", "formal"), ("sensitiviti", "sensitive"),
            ("sensibiliti", "sensible"),
        ]),
        "step3": (lambda w: _apply_table(w, STEP3), [
            ("triplicate", "triplic"), ("formative", "form"),
            ("formalize", "formal"), ("electriciti", "electric"),
            ("electrical", "electric"), ("hopeful", "hope"),
            ("goodness", "good"),
        ]),
        "step4": (lambda w: _apply_table(w, STEP4), [
            ("revival", "reviv"), ("allowance", "allow"),
            ("inference", "infer"), ("airliner", "airlin"),
            ("gyroscopic", "gyroscop"), ("adjustable", "adjust"),
            ("defensible", "defens"), ("irritant", "irrit"),
            ("replacement", "replac"), ("adjustment", "adjust"),
            ("dependent", "depend"), ("adoption", "adopt"),
            ("homologou", "homolog"), ("communism", "commun"),
            ("activate", "activ"), ("angulariti", "angular"),
            ("homologous", "homolog"), ("effective", "effect"),
        ]),
        "step5": (_step5, [
            ("probate", "probat"), ("rate", "rate"), ("cease", "ceas"),
            ("controll", "control"), ("roll", "roll"),
        ]),
    }
    for step, (fn, pairs) in cases.items():
        for word, expected in pairs:
            got = fn(word)
            if got != expected:
                raise AssertionError(f"porter {step}: {word} -> {got}, expected {expected}")


# ------------------------------------------------------------------ metrics

EPS = 1e-9


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate, reference):
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not ref:
        raise ValueError("reference has no tokens")
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        total = max(0, len(cand) - n + 1)
        cand_grams = _ngrams(cand, n)
        ref_grams = _ngrams(ref, n)
        clipped = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
        if total == 0:
            p = EPS
        elif clipped == 0:
            p = EPS / total
        else:
            p = clipped / total
        log_sum += 0.25 * math.log(p)
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(log_sum)


def _f1(p, r):
    return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def rouge1(candidate, reference):
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not ref:
        raise ValueError("reference has no tokens")
    if not cand:
        return 0.0
    overlap = sum((Counter(cand) & Counter(ref)).values())
    return _f1(overlap / len(cand), overlap / len(ref))


def _lcs_ref_indices(ref, cand):
    rows = len(ref)
    cols = len(cand)
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            if ref[i - 1] == cand[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    picked = []
    i, j = rows, cols
    while i > 0 and j > 0:
        if ref[i - 1] == cand[j - 1]:
            picked.append(i - 1)
            i -= 1
            j -= 1
        elif table[i][j - 1] > table[i - 1][j]:
            j -= 1
        else:
            i -= 1
    return set(picked)


def rouge_lsum(candidate, reference):
    if not tokenize(reference):
        raise ValueError("reference has no tokens")
    ref_sents = tokenized_sentences(reference)
    cand_sents = tokenized_sentences(candidate)
    m = sum(len(s) for s in ref_sents)
    n = sum(len(s) for s in cand_sents)
    if n == 0:
        return 0.0
    ref_budget = Counter(t for s in ref_sents for t in s)
    cand_budget = Counter(t for s in cand_sents for t in s)
    hits = 0
    for ref_sent in ref_sents:
        union = set()
        for cand_sent in cand_sents:
            union |= _lcs_ref_indices(ref_sent, cand_sent)
        for idx in sorted(union):
            token = ref_sent[idx]
            if cand_budget[token] > 0 and ref_budget[token] > 0:
                hits += 1
                cand_budget[token] -= 1
                ref_budget[token] -= 1
    return _f1(hits / n, hits / m)


def _align_stage(hyp, ref, matches):
    for i in range(len(hyp) - 1, -1, -1):
        for j in range(len(ref) - 1, -1, -1):
            if hyp[i][1] == ref[j][1]:
                matches.append((hyp[i][0], ref[j][0]))
                hyp.pop(i)
                ref.pop(j)
                break


def meteor(candidate, reference):
    hyp_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    if not ref_tokens:
        raise ValueError("reference has no tokens")
    if not hyp_tokens:
        return 0.0
    hyp = list(enumerate(hyp_tokens))
    ref = list(enumerate(ref_tokens))
    matches = []
    _align_stage(hyp, ref, matches)
    hyp = [(i, porter(hyp_tokens[i])) for i, _ in hyp]
    ref = [(i, porter(ref_tokens[i])) for i, _ in ref]
    _align_stage(hyp, ref, matches)
    matches.sort()
    if not matches:
        return 0.0
    p = len(matches) / len(hyp_tokens)
    r = len(matches) / len(ref_tokens)
    denom = 0.9 * p + 0.1 * r
    if denom == 0.0:
        return 0.0
    fmean = p * r / denom
    chunks = 1
    for a, b in zip(matches, matches[1:]):
        if not (b[0] == a[0] + 1 and b[1] == a[1] + 1):
            chunks += 1
    penalty = 0.5 * (chunks / len(matches)) ** 3
    return (1.0 - penalty) * fmean


# ----------------------------------------------------------------- fixtures

PAIRS = [
    ("p01", "The triangle ABC has a right angle at B.",
     "The triangle ABC has a right angle at B."),
    ("p02", "circle tangent radius", "square diagonal midpoint"),
    ("p03", "The circle has radius 5 and center O. The chord AB is 8 long.",
     "The circle with center O has radius 5. Chord AB has length 8."),
    ("p04", "angle is 30° so the arc equals π/6 of the circle",
     "the arc equals π/6 because the angle is 30°"),
    ("p05", "Step 1. Draw the altitude.\nStep 2. Apply the Pythagorean theorem.\n"
            "Answer: 12",
     "First draw the altitude from C.\nThen apply the Pythagorean theorem.\n"
     "The answer is 12."),
    ("p06", "a b c d a b c d a b c d", "a b c d"),
    ("p07", "running runner ran", "run runners running"),
    ("p08", "the quadrilateral is a parallelogram because opposite sides are parallel",
     "opposite sides are parallel so the quadrilateral is a parallelogram"),
    ("p09", "x", "the value of x is seven"),
    ("p10", "7", "7"),
    ("p11", "The area equals 24.5 square units exactly.",
     "The area is 24.5 square units."),
    ("p12", "AB equals CD. BC equals AD! Is that enough?",
     "AB equals CD. BC equals AD. That is enough."),
    ("p13", "relational conditional rational decisions",
     "relate condition ration decide"),
    ("p14", "the the the the", "the cat sat on the mat"),
    ("p15", "Angle ABC measures ninety degrees, hence triangle ABC is right angled.",
     "Triangle ABC is right angled since angle ABC measures ninety degrees."),
    ("p16", "one two three four five six seven eight nine ten",
     "one two three four five six seven eight nine ten eleven twelve"),
    ("p17", "hypotenuse computation yields 13 via 5 and 12",
     "computing the hypotenuse from 5 and 12 yields 13"),
    ("p18", "", "a non empty reference sentence"),
    ("p19", "Segments: AB = 3, CD = 4.\nChoices: A: 5 B: 6 C: 7 D: 8",
     "Segments: AB = 3, CD = 4.\nChoices: A: 5 B: 6 C: 7 D: 8"),
    ("p20", "the proof follows by symmetry and reflection across the median line",
     "by reflecting across the median the proof follows from symmetry"),
]

PORTER_WORDS = [
    "caresses", "ponies", "ties", "caress", "cats", "feed", "agreed",
    "plastered", "bled", "motoring", "sing", "conflated", "troubled", "sized",
    "hopping", "tanned", "falling", "hissing", "fizzed", "failing", "filing",
    "happy", "sky", "relational", "conditional", "rational", "valenci",
    "hesitanci", "digitizer", "radicalli", "differentli", "vileli",
    "analogousli", "vietnamization", "predication", "operator", "feudalism",
    "decisiveness", "hopefulness", "callousness", "formaliti", "sensitiviti",
    "sensibiliti", "triplicate", "formative", "formalize", "electriciti",
    "electrical", "hopeful", "goodness", "revival", "allowance", "inference",
    "airliner", "gyroscopic", "adjustable", "defensible", "irritant",
    "replacement", "adjustment", "dependent", "adoption", "communism",
    "activate", "angulariti", "homologous", "effective", "bombardment",
    "probate", "rate", "cease", "controll", "roll", "a", "s", "y", "ss",
    "oscillate", "oscillating", "generalization", "generalizations",
    "triangle", "triangles", "equation", "equations", "measurement",
    "perpendicular", "symmetry", "reflection", "running", "runner", "ran",
]


def main():
    _self_check_porter()
    out = {
        "pairs": [
            {
                "id": pid,
                "candidate": cand,
                "reference": ref,
                "bleu4": bleu4(cand, ref),
                "rouge1": rouge1(cand, ref),
                "rouge_lsum": rouge_lsum(cand, ref),
                "meteor": meteor(cand, ref),
            }
            for pid, cand, ref in PAIRS
        ],
        "porter": [{"word": w, "stem": porter(w)} for w in PORTER_WORDS],
    }
    dest = Path(__file__).resolve().parent.parent / "fixtures" / "lexical_oracle.json"
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(json.dumps(out, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {dest} ({len(out['pairs'])} pairs, {len(out['porter'])} stems)")


if __name__ == "__main__":
    sys.exit(main())
