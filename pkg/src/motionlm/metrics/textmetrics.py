"""Caption similarity metrics: BLEU, ROUGE-L, CIDEr-D."""
from __future__ import annotations

import re
from collections import Counter
from typing import List, Sequence

import numpy as np

_WORD = re.compile(r"[a-z0-9]+")
CIDER_SIGMA = 6.0
ROUGE_BETA = 1.2


def word_tokens(text: str) -> List[str]:
    return _WORD.findall(text.lower())


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, references: List[str], max_n: int = 4) -> float:
    """Clipped n-gram precision with brevity penalty; 0 if any order has
    no matches (no smoothing)."""
    cand = word_tokens(candidate)
    refs = [word_tokens(r) for r in references]
    if not refs:
        raise ValueError("need at least one reference")
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_grams = _ngrams(cand, n)
        total = sum(cand_grams.values())
        if total == 0:
            return 0.0
        clip = Counter()
        for ref in refs:
            ref_grams = _ngrams(ref, n)
            for g in cand_grams:
                clip[g] = max(clip[g], ref_grams.get(g, 0))
        matched = sum(min(c, clip[g]) for g, c in cand_grams.items())
        if matched == 0:
            return 0.0
        log_sum += np.log(matched / total) / max_n
    closest = min(refs, key=lambda r: (abs(len(r) - len(cand)), len(r)))
    r, c = len(closest), len(cand)
    bp = 1.0 if c >= r else np.exp(1.0 - r / c)
    return float(bp * np.exp(log_sum))


def _lcs(a: Sequence[str], b: Sequence[str]) -> int:
    dp = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = dp[j]
            dp[j] = prev + 1 if x == y else max(dp[j], dp[j - 1])
            prev = cur
    return dp[-1]


def rouge_l(candidate: str, references: List[str], beta: float = ROUGE_BETA) -> float:
    """LCS F-measure, max over references."""
    cand = word_tokens(candidate)
    if not references:
        raise ValueError("need at least one reference")
    if not cand:
        return 0.0
    best = 0.0
    for reference in references:
        ref = word_tokens(reference)
        if not ref:
            continue
        lcs = _lcs(cand, ref)
        if lcs == 0:
            continue
        p, r = lcs / len(cand), lcs / len(ref)
        f = (1 + beta ** 2) * p * r / (r + beta ** 2 * p)
        best = max(best, f)
    return float(best)


class CiderScorer:
    """CIDEr-D over a fixed corpus of reference sets (document
    frequencies come from the corpus)."""

    def __init__(self, corpus_references: List[List[str]], max_n: int = 4):
        self.max_n = max_n
        self.doc_count = len(corpus_references)
        if self.doc_count == 0:
            raise ValueError("empty corpus")
        self.df = [Counter() for _ in range(max_n)]
        for refs in corpus_references:
            seen = [set() for _ in range(max_n)]
            for ref in refs:
                toks = word_tokens(ref)
                for n in range(1, max_n + 1):
                    seen[n - 1].update(_ngrams(toks, n).keys())
            for n in range(max_n):
                for g in seen[n]:
                    self.df[n][g] += 1

    def _tfidf(self, counts: Counter, n: int):
        vec = {}
        length = max(sum(counts.values()), 1)
        for g, c in counts.items():
            idf = np.log(max(self.doc_count, 1)) - np.log(max(self.df[n].get(g, 0), 1))
            vec[g] = (c / length) * idf
        norm = np.sqrt(sum(v * v for v in vec.values()))
        return vec, norm

    def score(self, candidate: str, references: List[str]) -> float:
        cand = word_tokens(candidate)
        if not cand or not references:
            return 0.0
        total = 0.0
        for n in range(1, self.max_n + 1):
            cand_vec, cand_norm = self._tfidf(_ngrams(cand, n), n - 1)
            acc = 0.0
            for reference in references:
                ref = word_tokens(reference)
                ref_vec, ref_norm = self._tfidf(_ngrams(ref, n), n - 1)
                if cand_norm == 0 or ref_norm == 0:
                    continue
                # clipped dot: candidate weights capped by the reference's
                inner = sum(min(cand_vec[g], ref_vec.get(g, 0.0)) * ref_vec.get(g, 0.0)
                            for g in cand_vec)
                penalty = np.exp(-((len(cand) - len(ref)) ** 2) / (2 * CIDER_SIGMA ** 2))
                acc += penalty * inner / (cand_norm * ref_norm)
            total += 10.0 * acc / len(references)
        return float(total / self.max_n)


def text_metrics(candidate: str, references: List[str],
                 cider: CiderScorer = None) -> dict:
    """bleu@1, bleu@4, rouge_l, and cider_d (when a corpus scorer is
    supplied; otherwise the candidate's references form the corpus)."""
    if not references:
        raise ValueError("need at least one reference")
    scorer = cider or CiderScorer([references])
    return {
        "bleu@1": bleu(candidate, references, max_n=1),
        "bleu@4": bleu(candidate, references, max_n=4),
        "rouge_l": rouge_l(candidate, references),
        "cider_d": scorer.score(candidate, references),
    }
