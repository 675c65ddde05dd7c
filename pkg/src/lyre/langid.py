"""Character-trigram language identification for corpus hygiene.

A small add-one-smoothed trigram model is enough to tell English from
Portuguese lyrics; profiles for both ship with the package, and callers can
fit their own from sample text for other language pairs.
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator

from .errors import LanguageDetectionError

_WS_RE = re.compile(r"\s+")


def _normalize(text: str) -> str:
    """Casefold, strip everything but letters and spaces, collapse whitespace."""
    text = unicodedata.normalize("NFC", text).casefold()
    kept = [ch if ch.isalpha() else " " for ch in text]
    return _WS_RE.sub(" ", "".join(kept)).strip()


def _trigrams(normalized: str) -> list[str]:
    padded = f" {normalized} "
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


@dataclass(frozen=True)
class LanguageProfile:
    """Trigram log-probabilities for one language.

    Probabilities use add-one smoothing: an observed trigram t gets
    (count(t) + 1) / (total + distinct + 1), so the listed probabilities sum
    to strictly less than one and the remainder covers unseen trigrams.
    """

    language: str
    trigram_logprobs: Mapping[str, float]
    unseen_logprob: float = field(default=-20.0)

    @classmethod
    def from_text(cls, language: str, text: str) -> "LanguageProfile":
        counts = Counter(_trigrams(_normalize(text)))
        if not counts:
            raise LanguageDetectionError(f"no trigrams in profile text for {language!r}")
        total = sum(counts.values())
        denom = total + len(counts) + 1
        logprobs = {t: math.log((c + 1) / denom) for t, c in counts.items()}
        return cls(language=language, trigram_logprobs=logprobs,
                   unseen_logprob=math.log(1.0 / denom))

    def mean_log_likelihood(self, trigrams: Sequence[str]) -> float:
        lp = self.trigram_logprobs
        unseen = self.unseen_logprob
        return sum(lp.get(t, unseen) for t in trigrams) / len(trigrams)


def detect_language(
    text: str, profiles: Sequence[LanguageProfile]
) -> tuple[str, float]:
    """Pick the profile with the highest per-trigram log-likelihood.

    The returned score is the softmax weight of the winner over all profiles,
    so it always exceeds 1/len(profiles) and 0.5 in the two-language case.
    """
    if len(profiles) < 2:
        raise ValueError("need at least two language profiles")
    normalized = _normalize(text)
    if len(normalized) < 3:
        raise LanguageDetectionError(
            f"text too short to detect a language: {text[:40]!r}"
        )
    trigrams = _trigrams(normalized)
    scores = [(p.mean_log_likelihood(trigrams), p.language) for p in profiles]
    best = max(scores)
    shift = best[0]
    weights = [math.exp(s - shift) for s, _ in scores]
    return best[1], math.exp(0.0) / sum(weights)


@lru_cache(maxsize=1)
def builtin_profiles() -> tuple[LanguageProfile, ...]:
    """English and Portuguese profiles fitted from packaged seed text."""
    profiles = []
    for lang in ("en", "pt"):
        seed = resources.files("lyre.data").joinpath(f"lang_{lang}.txt").read_text("utf-8")
        profiles.append(LanguageProfile.from_text(lang, seed))
    return tuple(profiles)


class TrigramLanguageDetector(BaseEstimator):
    """Estimator-flavoured wrapper: fit on (texts, languages), predict languages.

    Constructed with `profiles=None` it falls back to the bundled en/pt
    profiles, which is the pass-through-friendly default for the lyrics
    pipeline.
    """

    def __init__(self, profiles: Sequence[LanguageProfile] | None = None):
        self.profiles = profiles

    def fit(self, X: Iterable[str], y: Iterable[str]):
        texts_by_language: dict[str, list[str]] = {}
        for text, language in zip(X, y):
            texts_by_language.setdefault(language, []).append(text)
        if len(texts_by_language) < 2:
            raise ValueError("need training text in at least two languages")
        self.profiles_ = tuple(
            LanguageProfile.from_text(lang, "\n".join(texts))
            for lang, texts in sorted(texts_by_language.items())
        )
        return self

    def _active_profiles(self) -> Sequence[LanguageProfile]:
        fitted = getattr(self, "profiles_", None)
        if fitted is not None:
            return fitted
        if self.profiles is not None:
            return self.profiles
        return builtin_profiles()

    def detect(self, text: str) -> tuple[str, float]:
        return detect_language(text, self._active_profiles())

    def predict(self, X: Iterable[str]) -> list[str]:
        return [self.detect(text)[0] for text in X]
