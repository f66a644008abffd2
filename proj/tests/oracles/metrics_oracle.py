"""Reference BLEU and NIST for the golden cases frozen in test_metrics.cpp.

Written from the metric definitions with plain Python counting; shares no
code with the C++ implementation. Run: python3 tests/oracles/metrics_oracle.py
"""
import math
from collections import Counter


def ngrams(toks, n):
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def bleu(hyps, refsets, order=4):
    match = [0] * order
    total = [0] * order
    hyp_len = ref_len = 0
    for hyp, refs in zip(hyps, refsets):
        hyp_len += len(hyp)
        # closest reference length, shorter on ties
        ref_len += min((abs(len(r) - len(hyp)), len(r)) for r in refs)[1]
        for n in range(1, order + 1):
            h = ngrams(hyp, n)
            best = Counter()
            for r in refs:
                for g, c in ngrams(r, n).items():
                    best[g] = max(best[g], c)
            match[n - 1] += sum(min(c, best[g]) for g, c in h.items())
            total[n - 1] += max(len(hyp) - n + 1, 0)
    # an order with no hypothesis n-grams at all is vacuously precise
    if any(m == 0 and t > 0 for m, t in zip(match, total)) or hyp_len == 0:
        return 0.0
    logp = sum(math.log(m / t) for m, t in zip(match, total) if t > 0) / order
    bp = 0.0 if hyp_len >= ref_len else 1.0 - ref_len / hyp_len
    return 100.0 * math.exp(bp + logp)


def nist(hyps, refsets, order=5):
    counts = Counter()
    words = 0
    for refs in refsets:
        for r in refs:
            words += len(r)
            for n in range(1, order + 1):
                counts.update(ngrams(r, n))

    def info(g):
        ctx = words if len(g) == 1 else counts[g[:-1]]
        return math.log2(ctx / counts[g])

    gain = [0.0] * order
    total = [0] * order
    hyp_len = 0
    ref_len = 0.0
    for hyp, refs in zip(hyps, refsets):
        hyp_len += len(hyp)
        ref_len += sum(len(r) for r in refs) / len(refs)
        for n in range(1, order + 1):
            best = Counter()
            for r in refs:
                for g, c in ngrams(r, n).items():
                    best[g] = max(best[g], c)
            for g, c in ngrams(hyp, n).items():
                if g in best:
                    gain[n - 1] += info(g) * min(c, best[g])
            total[n - 1] += max(len(hyp) - n + 1, 0)
    score = sum(g / max(t, 1) for g, t in zip(gain, total))
    beta = -math.log(0.5) / math.log(1.5) ** 2
    ratio = min(hyp_len / ref_len, 1.0)
    return score * (math.exp(-beta * math.log(ratio) ** 2) if ratio > 0 else 0.0)


def s(text):
    return text.split()


CASES = {
    "clipping": ([s("the the the the the the the")], [[s("the cat is on the mat")]]),
    "partial": ([s("the cat sat on the mat today")],
                [[s("the cat sat on the mat"), s("a cat was sitting on the mat")]]),
    "brevity": ([s("x-name is a cheap italian restaurant")],
                [[s("x-name is a cheap italian restaurant in the city centre")]]),
    "corpus": ([s("x-name serves french food near x-near ."),
                s("there is a pub called x-name in riverside ."),
                s("x-name is a moderate restaurant .")],
               [[s("x-name serves french food near x-near ."), s("x-name is near x-near and serves french food .")],
                [s("x-name is a pub in riverside ."), s("there is a pub called x-name in the riverside area .")],
                [s("x-name is a moderately priced restaurant ."), s("x-name is a restaurant with moderate prices .")]]),
    "two_sentence_self": ([s("a b c a"), s("b c d")], [[s("a b c a")], [s("b c d")]]),
    "longer_hyp": ([s("x-name is a restaurant that serves chinese and indian food near x-near in riverside")],
                   [[s("x-name serves chinese and indian food near x-near ."),
                     s("x-name is a restaurant near x-near in riverside .")]]),
    "no_four_grams": ([s("a b c"), s("b c")], [[s("a b c d")], [s("b c")]]),
}

if __name__ == "__main__":
    for name, (h, r) in CASES.items():
        print(f"{name:20s} BLEU {bleu(h, r):.10f}  NIST {nist(h, r):.10f}")
    h, r = CASES["clipping"]
    print("clipping unigram precision", sum(min(c, ngrams(r[0][0], 1)[g]) for g, c in ngrams(h[0], 1).items()), "/ 7")
