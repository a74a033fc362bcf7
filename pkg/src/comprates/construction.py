"""Adversarial compression-scheme constructions.

Two reconstruction functions are provided.  In the order-independent scheme
the support ``x_0 .. x_{km-1}`` is split into ``k`` blocks of ``m`` points and
the (unique) compression point that falls in block ``t`` encodes, through the
bits of its offset inside the block, the labels of every sub-block of block
``t``.  In the order-dependent scheme the support has ``m`` points split into
``k`` blocks of ``m/k`` points, and the ``t``-th element of the compression
sequence encodes the labels of block ``t`` through the bits of its index.

Within a block, point ``j`` at offset ``o`` belongs to sub-block
``o // bit_width + 1`` and carries bit position ``o % bit_width``.  When the
bit width does not divide the block size the last sub-block is partial.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .core import FiniteLabelDistribution, Hypothesis
from .rng import make_generator

CodeVector = tuple  # (i_1, ..., i_k) of support indices

MAX_BIT_WIDTH = 62


class ConfigurationError(ValueError):
    """A geometry or distribution parameter violates a construction constraint."""


class Variant(str, enum.Enum):
    ORDER_INDEPENDENT = "oi"
    ORDER_DEPENDENT = "od"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        aliases = {
            "oi": cls.ORDER_INDEPENDENT,
            "order-independent": cls.ORDER_INDEPENDENT,
            "od": cls.ORDER_DEPENDENT,
            "order-dependent": cls.ORDER_DEPENDENT,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown variant {value!r}; expected 'oi' or 'od'") from None


def bit(i: int, r: int) -> int:
    """Coefficient of ``2**r`` in the binary expansion of ``i``."""
    return (int(i) >> int(r)) & 1


@dataclass(frozen=True)
class BlockGeometry:
    variant: Variant
    n: int
    k: int
    m: int
    bit_width: int
    support_size: int
    block_size: int

    def block_start(self, t: int) -> int:
        """First support index of block ``t`` (1-based)."""
        self._check_block(t)
        return (t - 1) * self.block_size

    def block_range(self, t: int) -> range:
        start = self.block_start(t)
        return range(start, start + self.block_size)

    def code_base(self, t: int) -> int:
        """Value subtracted from a block-``t`` code before reading its bits."""
        if self.variant is Variant.ORDER_INDEPENDENT:
            return self.block_start(t)
        self._check_block(t)
        return 0

    def block_of(self, j: int) -> int:
        self._check_index(j)
        return j // self.block_size + 1

    def bit_position(self, j: int) -> int:
        self._check_index(j)
        return (j % self.block_size) % self.bit_width

    def sub_block(self, j: int) -> int:
        self._check_index(j)
        return (j % self.block_size) // self.bit_width + 1

    def bit_class(self, t: int, r: int) -> np.ndarray:
        """Support indices of block ``t`` sharing bit position ``r``."""
        if not 0 <= r < self.bit_width:
            raise ValueError(f"bit position {r} outside 0..{self.bit_width - 1}")
        return np.arange(self.block_start(t) + r, self.block_start(t) + self.block_size,
                         self.bit_width)

    def code_is_valid(self, t: int, i: int) -> bool:
        if self.variant is Variant.ORDER_INDEPENDENT:
            return i in self.block_range(t)
        return 0 <= i < self.m

    @cached_property
    def class_sizes(self) -> np.ndarray:
        """|C_{t,r}| for r = 0..bit_width-1 (identical for every block)."""
        q, rem = divmod(self.block_size, self.bit_width)
        sizes = np.full(self.bit_width, q, dtype=np.int64)
        sizes[:rem] += 1
        sizes.setflags(write=False)
        return sizes

    @cached_property
    def class_weights(self) -> np.ndarray:
        """Fraction of a block occupied by each bit class."""
        w = self.class_sizes / self.block_size
        w.setflags(write=False)
        return w

    @cached_property
    def point_block(self) -> np.ndarray:
        """0-based block number of every support index."""
        out = np.arange(self.support_size, dtype=np.int64) // self.block_size
        out.setflags(write=False)
        return out

    @cached_property
    def point_bit(self) -> np.ndarray:
        """Bit position of every support index."""
        out = (np.arange(self.support_size, dtype=np.int64) % self.block_size) % self.bit_width
        out.setflags(write=False)
        return out

    @property
    def divisible(self) -> bool:
        return self.block_size % self.bit_width == 0

    def _check_block(self, t: int) -> None:
        if not 1 <= t <= self.k:
            raise ValueError(f"block index {t} outside 1..{self.k}")

    def _check_index(self, j: int) -> None:
        if not 0 <= j < self.support_size:
            raise ValueError(f"support index {j} outside 0..{self.support_size - 1}")


def make_geometry(n: int, k: int, variant) -> BlockGeometry:
    variant = Variant.parse(variant)
    n, k = int(n), int(k)
    if n < 1 or k < 1:
        raise ConfigurationError("n and k must be positive integers")
    if variant is Variant.ORDER_INDEPENDENT:
        if n < 2 * k:
            raise ConfigurationError(f"order-independent variant requires n >= 2k (n={n}, k={k})")
        # floor(log2(n/k)) == floor(log2(floor(n/k)))
        width = (n // k).bit_length() - 1
        if width > MAX_BIT_WIDTH:
            raise ConfigurationError(f"code width {width} exceeds {MAX_BIT_WIDTH} bits")
        m = 1 << width
        return BlockGeometry(variant, n, k, m, width, k * m, m)

    if n < 2:
        raise ConfigurationError("order-dependent variant requires n >= 2")
    width = n.bit_length() - 1
    if width > MAX_BIT_WIDTH:
        raise ConfigurationError(f"code width {width} exceeds {MAX_BIT_WIDTH} bits")
    m = 1 << width
    if m % k:
        raise ConfigurationError(f"order-dependent variant requires k to divide m (m={m}, k={k})")
    block = m // k
    if block < width:
        raise ConfigurationError(
            f"order-dependent variant requires block size m/k >= log2(m) "
            f"(m/k={block}, log2(m)={width})"
        )
    return BlockGeometry(variant, n, k, m, width, m, block)


def epsilon(geometry: BlockGeometry) -> float:
    """Bias sqrt(k log2(m) / n) of the hard distribution."""
    eps = float(np.sqrt(geometry.k * geometry.bit_width / geometry.n))
    if eps > 1.0:
        raise ConfigurationError(f"epsilon = {eps:.6g} exceeds 1; n is too small relative to k")
    return eps


def eval_block_hypothesis(t: int, i: int, j: int, geometry: BlockGeometry) -> int:
    """Label assigned to ``x_j`` by the block-``t`` classifier with code ``i``."""
    if j not in geometry.block_range(t):
        raise ValueError(f"support index {j} is not in block {t}")
    if not geometry.code_is_valid(t, i):
        raise ValueError(f"code {i} is not valid for block {t}")
    return bit(i - geometry.code_base(t), geometry.bit_position(j))


def check_code(code: Sequence[int], geometry: BlockGeometry) -> CodeVector:
    code = tuple(int(i) for i in code)
    if len(code) != geometry.k:
        raise ValueError(f"code vector has length {len(code)}, expected k={geometry.k}")
    for t, i in enumerate(code, start=1):
        if not geometry.code_is_valid(t, i):
            raise ValueError(f"code {i} is not valid for block {t}")
    return code


def code_to_hypothesis(code: Sequence[int], geometry: BlockGeometry) -> Hypothesis:
    code = check_code(code, geometry)
    labels = np.empty(geometry.support_size, dtype=np.int8)
    for t, i in enumerate(code, start=1):
        for j in geometry.block_range(t):
            labels[j] = eval_block_hypothesis(t, i, j, geometry)
    return Hypothesis(labels)


def _member_index(member) -> int:
    # Compression-set members may carry labels; the schemes ignore them.
    if isinstance(member, (tuple, list)):
        return int(member[0])
    return int(member)


def reconstruct_multiset(S: Iterable, geometry: BlockGeometry) -> CodeVector:
    """Order-independent reconstruction: smallest member per block, else the block start."""
    if geometry.variant is not Variant.ORDER_INDEPENDENT:
        raise ValueError("reconstruct_multiset needs an order-independent geometry")
    members = [_member_index(s) for s in S]
    if len(members) > geometry.k:
        raise ValueError(f"compression set has {len(members)} members, more than k={geometry.k}")
    for i in members:
        if not 0 <= i < geometry.support_size:
            raise ValueError(f"compression member {i} outside the support")
    code = []
    for t in range(1, geometry.k + 1):
        hits = [i for i in members if i in geometry.block_range(t)]
        code.append(min(hits) if hits else geometry.block_start(t))
    return tuple(code)


def reconstruct_sequence(S: Sequence, geometry: BlockGeometry) -> CodeVector:
    """Order-dependent reconstruction: in-support members in order, zero padded."""
    if geometry.variant is not Variant.ORDER_DEPENDENT:
        raise ValueError("reconstruct_sequence needs an order-dependent geometry")
    members = [_member_index(s) for s in S]
    if len(members) > geometry.k:
        raise ValueError(f"compression sequence has length {len(members)}, more than k={geometry.k}")
    kept = [i for i in members if 0 <= i < geometry.m]
    return tuple(kept) + (0,) * (geometry.k - len(kept))


def reconstruct(S, geometry: BlockGeometry) -> CodeVector:
    if geometry.variant is Variant.ORDER_INDEPENDENT:
        return reconstruct_multiset(S, geometry)
    return reconstruct_sequence(S, geometry)


def check_signs(sigma, geometry: BlockGeometry) -> np.ndarray:
    sigma = np.asarray(sigma)
    if sigma.shape != (geometry.k, geometry.bit_width):
        raise ValueError(
            f"sign matrix has shape {sigma.shape}, expected {(geometry.k, geometry.bit_width)}"
        )
    if not np.isin(sigma, (-1, 1)).all():
        raise ValueError("sign matrix entries must be -1 or +1")
    return sigma.astype(np.int8)


def sample_sign_matrix(geometry: BlockGeometry, seed: int) -> np.ndarray:
    rng = make_generator(seed)
    sigma = rng.integers(0, 2, size=(geometry.k, geometry.bit_width), dtype=np.int8) * 2 - 1
    sigma = sigma.astype(np.int8)
    sigma.setflags(write=False)
    return sigma


def build_distribution(sigma, geometry: BlockGeometry, eps: float | None = None) -> FiniteLabelDistribution:
    """Hard distribution with eta_j = 1/2 + (eps/2) sigma[t, r(j)].

    ``eps`` defaults to :func:`epsilon`; passing ``0.0`` gives the degenerate
    all-fair-coin distribution used to test exactness.
    """
    sigma = check_signs(sigma, geometry)
    if eps is None:
        eps = epsilon(geometry)
    elif not 0.0 <= eps <= 1.0:
        raise ConfigurationError(f"epsilon override {eps} outside [0, 1]")
    s = sigma[geometry.point_block, geometry.point_bit].astype(np.float64)
    return FiniteLabelDistribution(0.5 + 0.5 * eps * s)


def optimal_code(sigma, geometry: BlockGeometry) -> CodeVector:
    """Per block, the code whose bits give every bit class its majority label."""
    sigma = check_signs(sigma, geometry)
    majority = (sigma.astype(np.int64) + 1) // 2
    weights = 1 << np.arange(geometry.bit_width, dtype=np.int64)
    pattern = majority @ weights
    return tuple(geometry.code_base(t) + int(pattern[t - 1]) for t in range(1, geometry.k + 1))


def hamming_delta(t: int, i: int, sigma, geometry: BlockGeometry) -> int:
    """Number of bit positions where code ``i`` disagrees with the optimal block-``t`` code."""
    best = optimal_code(sigma, geometry)[t - 1]
    base = geometry.code_base(t)
    mask = (1 << geometry.bit_width) - 1
    return bin(((int(i) - base) ^ (best - base)) & mask).count("1")
