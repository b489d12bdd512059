#!/usr/bin/env python3
"""Independent reference BLEU used to freeze expected values for the C++ tests.

Sentence BLEU, orders 1..4, with:
  * clipped n-gram precision against the max reference count,
  * order-1 zero matches -> score 0,
  * add-one smoothing on orders >= 2 with zero matches,
  * brevity penalty exp(1 - r/c) for c < r, effective reference length =
    closest to the candidate (ties -> shorter).

Run from the repo root:  python3 tests/oracles/bleu_reference.py
Emits tests/bleu_oracle_cases.h (frozen pairs + expected values).
"""

import math
import random
from collections import Counter


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(candidate, references, max_order=4):
    cand = candidate.split()
    refs = [r.split() for r in references]
    assert cand and refs
    c = len(cand)
    r = min((abs(len(ref) - c), len(ref)) for ref in refs)[1]

    log_prec_sum = 0.0
    for n in range(1, max_order + 1):
        cand_counts = ngrams(cand, n)
        total = sum(cand_counts.values())
        max_ref = Counter()
        for ref in refs:
            for gram, cnt in ngrams(ref, n).items():
                max_ref[gram] = max(max_ref[gram], cnt)
        correct = sum(min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items())
        if correct == 0:
            if n == 1:
                return 0.0
            prec = (correct + 1.0) / (total + 1.0)
        else:
            prec = correct / total
        log_prec_sum += math.log(prec)

    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_prec_sum / max_order)


WORDS = ("the a cat dog bird sat ran jumped slept quickly slowly on under over "
         "mat tree house river big small red blue happy old young man woman "
         "child saw found lost carried yesterday today").split()


def random_sentence(rng, lo=1, hi=14):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(lo, hi)))


def perturb(rng, sentence):
    toks = sentence.split()
    out = []
    for t in toks:
        roll = rng.random()
        if roll < 0.18:
            continue
        if roll < 0.36:
            out.append(rng.choice(WORDS))
        else:
            out.append(t)
        if rng.random() < 0.12:
            out.append(rng.choice(WORDS))
    if not out:
        out = [rng.choice(WORDS)]
    return " ".join(out)


def main():
    rng = random.Random(20250810)
    cases = []
    # Hand-checkable anchors first.
    cases.append(("the cat sat", ["the cat sat down"]))
    cases.append(("the cat sat on the mat", ["the cat sat on the mat"]))
    cases.append(("dog dog dog", ["the quick brown fox"]))
    cases.append(("a", ["a"]))
    cases.append(("the the the the", ["the cat"]))
    cases.append(("the cat", ["the cat sat", "a cat sat down"]))
    while len(cases) < 50:
        ref = random_sentence(rng, 3, 14)
        n_refs = 1 if rng.random() < 0.7 else 2
        refs = [ref] + [perturb(rng, ref) for _ in range(n_refs - 1)]
        cand = ref if rng.random() < 0.08 else perturb(rng, ref)
        cases.append((cand, refs))

    lines = []
    lines.append("// Generated by tests/oracles/bleu_reference.py -- do not edit by hand.")
    lines.append("#pragma once")
    lines.append("#include <string>")
    lines.append("#include <vector>")
    lines.append("")
    lines.append("struct BleuOracleCase {")
    lines.append("  std::string candidate;")
    lines.append("  std::vector<std::string> references;")
    lines.append("  double expected;")
    lines.append("};")
    lines.append("")
    lines.append("inline const std::vector<BleuOracleCase>& bleu_oracle_cases() {")
    lines.append("  static const std::vector<BleuOracleCase> cases = {")
    for cand, refs in cases:
        score = sentence_bleu(cand, refs)
        refs_lit = ", ".join('"%s"' % r for r in refs)
        lines.append('      {"%s", {%s}, %.10f},' % (cand, refs_lit, score))
    lines.append("  };")
    lines.append("  return cases;")
    lines.append("}")
    with open("tests/bleu_oracle_cases.h", "w") as f:
        f.write("\n".join(lines) + "\n")

    print("anchor checks:")
    print("  identity:", sentence_bleu("the cat sat on the mat", ["the cat sat on the mat"]))
    print("  'the cat sat' vs 'the cat sat down':", sentence_bleu("the cat sat", ["the cat sat down"]))
    print("  no overlap:", sentence_bleu("dog dog dog", ["the quick brown fox"]))
    print("  single token identity:", sentence_bleu("a", ["a"]))
    print("wrote tests/bleu_oracle_cases.h with", len(cases), "cases")


if __name__ == "__main__":
    main()
