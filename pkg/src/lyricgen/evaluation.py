"""Corpus-level BLEU and the next-sentence evaluation harness.

BLEU here is the classic corpus-level form: modified (clipped) n-gram
precisions up to 4-grams aggregated over the whole corpus, geometric mean
with uniform 1/4 weights, times the brevity penalty exp(1 - r/c) for
candidates shorter than the references. One reference per candidate, no
smoothing: any empty precision zeroes the score.
"""

from collections import Counter
from dataclasses import dataclass

import math

from .corpus import EOS_ID, GO_ID
from .inference import InferenceConfig, beam_search
from .model import ModelParams, encode

MAX_ORDER = 4


@dataclass
class BleuReport:
    bleu: float
    precisions: list  # modified n-gram precision, n = 1..4
    brevity_penalty: float
    candidate_len: int
    reference_len: int

    def lines(self):
        """Metric lines for the name<TAB>value report file."""
        rows = [("bleu", self.bleu), ("brevity_penalty", self.brevity_penalty),
                ("candidate_len", self.candidate_len),
                ("reference_len", self.reference_len)]
        rows += [(f"precision_{n}", p) for n, p in enumerate(self.precisions, start=1)]
        return [f"{name}\t{value}" for name, value in rows]


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates, references) -> BleuReport:
    """Corpus BLEU of parallel token sequences (one reference each)."""
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise ValueError("need at least one candidate/reference pair")

    matched = [0] * MAX_ORDER
    total = [0] * MAX_ORDER
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand = list(cand)
        ref = list(ref)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, MAX_ORDER + 1):
            counts = _ngrams(cand, n)
            if not counts:
                continue
            ref_counts = _ngrams(ref, n)
            total[n - 1] += sum(counts.values())
            matched[n - 1] += sum(min(c, ref_counts[g]) for g, c in counts.items())

    precisions = [m / t if t else 0.0 for m, t in zip(matched, total)]
    if cand_len == 0:
        bp = 0.0
    elif cand_len > ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / cand_len)
    if all(p > 0 for p in precisions):
        score = bp * math.exp(sum(math.log(p) for p in precisions) / MAX_ORDER)
    else:
        score = 0.0
    return BleuReport(bleu=score, precisions=precisions, brevity_penalty=bp,
                      candidate_len=cand_len, reference_len=ref_len)


def strip_framing(ids):
    return [t for t in ids if t not in (GO_ID, EOS_ID)]


def decode_test_set(model: ModelParams, examples, cfg: InferenceConfig):
    """Beam-decode the next sentence for every test example.

    Returns (candidates, references) as parallel lists of content token ids.
    """
    candidates, references = [], []
    for example in examples:
        ctx = encode(model, example.context)
        hyps = beam_search(model, ctx, cfg)
        candidates.append(hyps[0].content)
        references.append(strip_framing(example.target))
    return candidates, references


def evaluate_model(model: ModelParams, examples, cfg: InferenceConfig) -> BleuReport:
    """BLEU of beam-decoded next sentences against the gold targets."""
    if not examples:
        raise ValueError("test set yields no examples")
    candidates, references = decode_test_set(model, examples, cfg)
    return bleu(candidates, references)


def write_report(report: BleuReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        for line in report.lines():
            fh.write(line + "\n")
