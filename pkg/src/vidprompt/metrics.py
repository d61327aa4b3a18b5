"""Corpus metrics for generated text: BLEU-4, ROUGE-L, CIDEr-D, accuracy, Recall@k.

The exact conventions (tokenization, brevity penalty, ROUGE beta, CIDEr
sigma and scale) are pinned here and mirrored by the brute-force oracles in
the test suite, which define this repo's ground truth. METEOR is deliberately
not implemented: it needs external lexical resources.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

ROUGE_L_BETA = 1.2
CIDER_SIGMA = 6.0
CIDER_SCALE = 10.0
MAX_NGRAM = 4

_PUNCT = re.compile(r"([^\w\s])")
_ARTICLES = frozenset({"a", "an", "the"})


def tokenize(text: str) -> list[str]:
    """Lowercase, separate punctuation into standalone tokens, split on whitespace."""
    return _PUNCT.sub(r" \1 ", text.lower()).split()


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class BleuBreakdown:
    precisions: tuple[float, float, float, float]
    brevity_penalty: float
    hypothesis_length: int
    reference_length: int
    score: float


def bleu4_details(hypotheses: list[str], reference_lists: list[list[str]]) -> BleuBreakdown:
    """Corpus BLEU with uniform 1..4-gram weights and clipped precision.

    The effective reference length per instance is the reference closest in
    length to the hypothesis (ties pick the shorter). Any order with zero
    clipped matches zeroes the whole score (no smoothing).
    """
    if not hypotheses or len(hypotheses) != len(reference_lists):
        raise ValueError("need a non-empty, aligned corpus")

    guess = [0] * MAX_NGRAM
    correct = [0] * MAX_NGRAM
    hyp_len = 0
    ref_len = 0
    for hypothesis, references in zip(hypotheses, reference_lists):
        if not references:
            raise ValueError("every instance needs at least one reference")
        hyp_tokens = tokenize(hypothesis)
        ref_token_lists = [tokenize(ref) for ref in references]
        hyp_len += len(hyp_tokens)
        closest = min(ref_token_lists, key=lambda r: (abs(len(r) - len(hyp_tokens)), len(r)))
        ref_len += len(closest)
        for n in range(1, MAX_NGRAM + 1):
            counts = _ngram_counts(hyp_tokens, n)
            guess[n - 1] += max(0, len(hyp_tokens) - n + 1)
            max_ref: Counter = Counter()
            for ref_tokens in ref_token_lists:
                for gram, count in _ngram_counts(ref_tokens, n).items():
                    max_ref[gram] = max(max_ref[gram], count)
            correct[n - 1] += sum(min(count, max_ref[gram]) for gram, count in counts.items())

    precisions = tuple(
        (correct[n] / guess[n]) if guess[n] > 0 else 0.0 for n in range(MAX_NGRAM)
    )
    if any(c == 0 for c in correct) or hyp_len == 0:
        return BleuBreakdown(precisions, 0.0, hyp_len, ref_len, 0.0)
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    score = brevity * math.exp(sum(math.log(p) for p in precisions) / MAX_NGRAM)
    return BleuBreakdown(precisions, brevity, hyp_len, ref_len, score)


def bleu4(hypotheses: list[str], reference_lists: list[list[str]]) -> float:
    return bleu4_details(hypotheses, reference_lists).score


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(hypotheses: list[str], reference_lists: list[list[str]]) -> float:
    """Corpus mean of per-instance ROUGE-L F (recall-weighted, beta=1.2, max over references)."""
    if not hypotheses or len(hypotheses) != len(reference_lists):
        raise ValueError("need a non-empty, aligned corpus")
    beta_sq = ROUGE_L_BETA**2
    scores = []
    for hypothesis, references in zip(hypotheses, reference_lists):
        if not references:
            raise ValueError("every instance needs at least one reference")
        hyp_tokens = tokenize(hypothesis)
        best = 0.0
        for reference in references:
            ref_tokens = tokenize(reference)
            lcs = _lcs_length(hyp_tokens, ref_tokens)
            if lcs == 0:
                continue
            precision = lcs / len(hyp_tokens)
            recall = lcs / len(ref_tokens)
            f_score = (1 + beta_sq) * precision * recall / (recall + beta_sq * precision)
            best = max(best, f_score)
        scores.append(best)
    return sum(scores) / len(scores)


def cider_d(hypotheses: list[str], reference_lists: list[list[str]]) -> float:
    """Consensus CIDEr-D: clipped TF-IDF n-gram cosine with a length penalty.

    IDF comes from the reference corpus (document frequency over instances),
    so the corpus must have at least two instances. Per n in 1..4 the
    hypothesis/reference cosine is clipped, multiplied by a Gaussian penalty
    exp(-(len_h - len_r)^2 / (2 * sigma^2)) on token-length difference,
    averaged over n and over references, then scaled by 10.
    """
    if len(hypotheses) != len(reference_lists):
        raise ValueError("need an aligned corpus")
    if len(hypotheses) < 2:
        raise ValueError("CIDEr-D needs at least two instances to define IDF")

    ref_token_corpus = [[tokenize(ref) for ref in refs] for refs in reference_lists]
    for refs in ref_token_corpus:
        if not refs:
            raise ValueError("every instance needs at least one reference")

    document_frequency: Counter = Counter()
    for refs in ref_token_corpus:
        seen: set[tuple] = set()
        for ref_tokens in refs:
            for n in range(1, MAX_NGRAM + 1):
                seen.update(_ngram_counts(ref_tokens, n))
        document_frequency.update(seen)
    log_corpus = math.log(len(hypotheses))

    def tfidf(tokens: list[str]):
        vectors = []
        norms = []
        for n in range(1, MAX_NGRAM + 1):
            vec = {
                gram: count * (log_corpus - math.log(max(1.0, document_frequency[gram])))
                for gram, count in _ngram_counts(tokens, n).items()
            }
            vectors.append(vec)
            norms.append(math.sqrt(sum(w * w for w in vec.values())))
        return vectors, norms

    scores = []
    for hypothesis, refs in zip(hypotheses, ref_token_corpus):
        hyp_tokens = tokenize(hypothesis)
        hyp_vectors, hyp_norms = tfidf(hyp_tokens)
        total = 0.0
        for ref_tokens in refs:
            ref_vectors, ref_norms = tfidf(ref_tokens)
            penalty = math.exp(
                -((len(hyp_tokens) - len(ref_tokens)) ** 2) / (2 * CIDER_SIGMA**2)
            )
            per_n = 0.0
            for n in range(MAX_NGRAM):
                if hyp_norms[n] == 0.0 or ref_norms[n] == 0.0:
                    continue
                overlap = sum(
                    min(weight, ref_vectors[n].get(gram, 0.0)) * ref_vectors[n].get(gram, 0.0)
                    for gram, weight in hyp_vectors[n].items()
                )
                per_n += penalty * overlap / (hyp_norms[n] * ref_norms[n])
            total += per_n / MAX_NGRAM
        scores.append(CIDER_SCALE * total / len(refs))
    return sum(scores) / len(scores)


def normalize_answer(text: str) -> str:
    """QA match normalization: lowercase, drop punctuation, collapse whitespace, strip leading articles."""
    text = re.sub(r"[^\w\s]", "", text.lower())
    tokens = text.split()
    while tokens and tokens[0] in _ARTICLES:
        tokens = tokens[1:]
    return " ".join(tokens)


def qa_accuracy(predictions: dict[str, str], golds: dict[str, str]) -> float:
    """Normalized exact-match accuracy over the gold keys; missing predictions are wrong."""
    if not golds:
        raise ValueError("gold answers must be non-empty")
    matches = sum(
        1
        for key, gold in golds.items()
        if key in predictions and normalize_answer(predictions[key]) == normalize_answer(gold)
    )
    return matches / len(golds)


def recall_at_k(similarity: np.ndarray, gold: list[int], k: int) -> float:
    """Fraction of queries whose gold item ranks within the top-k by similarity.

    Ranking is by descending similarity with ties broken by ascending item
    index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    similarity = np.asarray(similarity, dtype=np.float64)
    if similarity.ndim != 2 or similarity.shape[0] != len(gold):
        raise ValueError("similarity must be (queries, items) aligned with gold")
    items = similarity.shape[1]
    hits = 0
    for row, gold_index in zip(similarity, gold):
        if not 0 <= gold_index < items:
            raise ValueError(f"gold index {gold_index} out of range")
        order = sorted(range(items), key=lambda i: (-row[i], i))
        if gold_index in order[:k]:
            hits += 1
    return hits / len(gold)
