"""Signal-word vocabulary and noise sampling for the word model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CannotSampleError, ValidationError

NOISE_EXPONENT = 0.75


@dataclass(frozen=True)
class SignalVocab:
    """Surviving signal words with corpus frequencies and noise weights.

    Frequency counts one occurrence per signal set containing the word.
    Sampling weights follow the unigram^0.75 noise distribution.
    """

    words: tuple[str, ...]
    frequencies: tuple[int, ...]
    sampling_weights: np.ndarray = field(compare=False, repr=False, default=None)
    index: dict[str, int] = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if len(self.words) != len(set(self.words)):
            raise ValidationError("signal vocabulary contains duplicate words")
        if len(self.words) != len(self.frequencies):
            raise ValidationError("words and frequencies length mismatch")
        if any(f < 1 for f in self.frequencies):
            raise ValidationError("signal-word frequencies must be >= 1")
        weights = np.asarray(self.frequencies, dtype=np.float64) ** NOISE_EXPONENT
        weights /= weights.sum()
        object.__setattr__(self, "sampling_weights", weights)
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_signal_sets(cls, signal_sets) -> "SignalVocab":
        """Vocabulary in order of first appearance across the given sets."""
        counts: dict[str, int] = {}
        for ss in signal_sets:
            for word in ss.word_list():
                counts[word] = counts.get(word, 0) + 1
        if not counts:
            raise ValidationError("no signal words to build a vocabulary from")
        return cls(words=tuple(counts), frequencies=tuple(counts.values()))


def sample_negatives(
    vocab: SignalVocab, n: int, exclude: int | None, rng: np.random.Generator
) -> np.ndarray:
    """Draw n noise-word indices i.i.d. from the unigram^0.75 distribution.

    Draws colliding with the excluded positive index are redrawn, so the
    result never contains it; repeats among the negatives themselves are
    allowed. Deterministic given the generator state.
    """
    if len(vocab) < 2:
        raise CannotSampleError(
            f"cannot sample negatives from a vocabulary of size {len(vocab)}"
        )
    if n < 1:
        raise ValidationError(f"negative sample count must be >= 1, got {n}")
    if exclude is not None and not 0 <= exclude < len(vocab):
        raise ValidationError(f"exclude index {exclude} out of range")
    draws = rng.choice(len(vocab), size=n, p=vocab.sampling_weights)
    if exclude is not None:
        while True:
            collisions = draws == exclude
            hits = int(collisions.sum())
            if hits == 0:
                break
            draws[collisions] = rng.choice(
                len(vocab), size=hits, p=vocab.sampling_weights
            )
    return draws.astype(np.int64)
