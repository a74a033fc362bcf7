"""Finite-support label distributions, hypotheses, sampling and risk evaluation.

The instance space is always the finite set ``x_0, ..., x_{N-1}``, so an
instance is represented by its index and a hypothesis by a 0/1 label vector
of length ``N``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .rng import make_generator


class LabeledExample(NamedTuple):
    instance_index: int
    label: int


def _as_labels(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 labels")
    out = arr.astype(np.int8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """A total classifier on the support, stored as its label vector."""

    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", _as_labels(self.labels, "labels"))

    def __len__(self) -> int:
        return int(self.labels.size)

    def __call__(self, index: int) -> int:
        return int(self.labels[index])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypothesis):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def complement(self) -> "Hypothesis":
        return Hypothesis(1 - self.labels)


@dataclass(frozen=True, eq=False)
class FiniteLabelDistribution:
    """Uniform marginal over ``support_size`` points with P(Y=1 | x_j) = eta[j]."""

    eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=np.float64)
        if eta.ndim != 1 or eta.size < 1:
            raise ValueError("eta must be a nonempty one-dimensional array")
        if not np.all((eta >= 0.0) & (eta <= 1.0)):
            raise ValueError("every eta_j must lie in [0, 1]")
        eta = eta.copy()
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def support_size(self) -> int:
        return int(self.eta.size)

    def point_error(self, h: Hypothesis) -> np.ndarray:
        """Per-point probability that ``h`` mislabels ``x_j``."""
        if len(h) != self.support_size:
            raise ValueError(
                f"hypothesis has {len(h)} labels but support size is {self.support_size}"
            )
        return np.where(h.labels == 1, 1.0 - self.eta, self.eta)


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered i.i.d. sample ``Z_[n]`` stored column-wise."""

    indices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size and idx.min() < 0:
            raise ValueError("instance indices must be nonnegative")
        labels = _as_labels(self.labels, "labels")
        if labels.size != idx.size:
            raise ValueError("indices and labels must have equal length")
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_examples(cls, examples: Iterable[tuple[int, int]]) -> "Sample":
        pairs = [tuple(e) for e in examples]
        return cls(
            np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.int8),
        )

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        for i, y in zip(self.indices.tolist(), self.labels.tolist()):
            yield LabeledExample(i, y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.labels, other.labels
        )

    __hash__ = None


def true_risk(h: Hypothesis, P: FiniteLabelDistribution) -> float:
    """R(h; P) = (1/N) sum_j P(h(x_j) != Y | x_j)."""
    return float(np.mean(P.point_error(h)))


def empirical_risk(h: Hypothesis, sample: Sample) -> float:
    n = len(sample)
    if n == 0:
        raise ValueError("empirical risk of an empty sample is undefined")
    if sample.indices.max() >= len(h):
        raise ValueError("sample refers to an instance outside the hypothesis support")
    mistakes = int(np.count_nonzero(h.labels[sample.indices] != sample.labels))
    return mistakes / n


def conditional_risk(h: Hypothesis, P: FiniteLabelDistribution, subset) -> float:
    """Risk of ``h`` under ``P`` conditioned on ``X`` falling in ``subset``."""
    idx = np.unique(np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset,
                               dtype=np.int64))
    if idx.size == 0:
        raise ValueError("conditioning subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= P.support_size:
        raise ValueError("conditioning subset contains indices outside the support")
    return float(np.mean(P.point_error(h)[idx]))


def sample_dataset(P: FiniteLabelDistribution, n: int, seed: int) -> Sample:
    """Draw ``n`` i.i.d. examples; a pure function of ``seed``."""
    if n < 1:
        raise ValueError("sample size n must be at least 1")
    rng = make_generator(seed)
    indices = rng.integers(0, P.support_size, size=n, dtype=np.int64)
    labels = (rng.random(n) < P.eta[indices]).astype(np.int8)
    return Sample(indices, labels)
