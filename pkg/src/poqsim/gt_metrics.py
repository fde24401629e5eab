"""Ground-truth quality: SQuAD-style token F1 scaled to [0, 10]."""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable

from .records import GenerationRecord

_ARTICLES = re.compile(r"\b(a|an|the)\b")


@dataclass(frozen=True)
class TokenF1Result:
    precision: float
    recall: float
    f1: float

    @property
    def scaled(self) -> float:
        return 10.0 * self.f1


def _strip_punctuation(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def normalize_text(s: str) -> list[str]:
    """Lowercase, drop punctuation and the articles a/an/the, split on whitespace."""
    text = _strip_punctuation(s.lower())
    text = _ARTICLES.sub(" ", text)
    return text.split()


def token_f1(prediction: str, reference: str) -> TokenF1Result:
    pred = normalize_text(prediction)
    ref = normalize_text(reference)
    common = Counter(pred) & Counter(ref)
    overlap = sum(common.values())
    if overlap == 0:
        # also covers both sides empty: an empty answer never scores as perfect
        return TokenF1Result(0.0, 0.0, 0.0)
    precision = overlap / len(pred)
    recall = overlap / len(ref)
    f1 = min(2 * precision * recall / (precision + recall), 1.0)
    return TokenF1Result(precision, recall, f1)


def score_generations(records: Iterable[GenerationRecord]) -> list[GenerationRecord]:
    """Return copies of ``records`` with ``gt_score`` set from output vs. reference."""
    return [replace(rec, gt_score=token_f1(rec.output, rec.reference).scaled) for rec in records]
