"""Monte Carlo evaluation of the M-dimensional correct-decision integrals.

Each P(correct | s_i) is the fraction of standard-normal vectors v falling in
the decision region of the rotated QR geometry.  Samples are drawn in fixed
blocks, each from its own generator keyed by (seed, symbol, block), and the
integer hit counts are summed, so the result is independent of how blocks are
spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import closed_form
from ._rng import BLOCK, block_rng, blocks
from .codeset import CodeSet, Mode
from .errors import BudgetError, ValidationError
from .geometry import QrPair, factor_symbol, region_mask

METHODS = ("mc", "quadrature", "simulation", "bound")


@dataclass(frozen=True)
class SerEstimate:
    p_e: float
    std_err: float
    samples_total: int
    per_symbol_pc: tuple
    method: str = "mc"
    seed: int | None = None


@dataclass(frozen=True)
class BudgetPolicy:
    """Chebyshev sample sizing: KM = 1 / (delta * epsilon^2 * p_e_ref), capped.

    ``p_e_ref=None`` means "use the orthogonal/biorthogonal closed form at the
    same (M, Es/N0)", resolved by :func:`estimate_ser`.
    """

    delta: float = 0.05
    epsilon: float = 0.1
    p_e_ref: float | None = None
    cap: int | None = 10**9

    def __post_init__(self):
        if not 0 < self.delta < 1 or not 0 < self.epsilon < 1:
            raise ValidationError("delta and epsilon must lie in (0, 1)")
        if self.p_e_ref is not None and not 0 < self.p_e_ref <= 1:
            raise ValidationError(f"p_e_ref must lie in (0, 1], got {self.p_e_ref}")
        if self.cap is not None and self.cap < 1:
            raise ValidationError("cap must be positive")

    def with_reference(self, p_e_ref: float) -> BudgetPolicy:
        return BudgetPolicy(self.delta, self.epsilon, p_e_ref, self.cap)


def _exact(x: float) -> Fraction:
    # decimal reading of the float, so 0.01 means 1/100 and 1e8 comes out exact
    return Fraction(repr(float(x)))


def chebyshev_samples(policy: BudgetPolicy) -> int:
    """Uncapped ceil(1 / (delta eps^2 p_e_ref))."""
    if policy.p_e_ref is None:
        raise ValidationError("policy has no p_e_ref")
    n = 1 / (_exact(policy.delta) * _exact(policy.epsilon) ** 2 * _exact(policy.p_e_ref))
    return math.ceil(n)


def required_samples(policy: BudgetPolicy, M: int = 1) -> int:
    """Total sample count KM: the Chebyshev count, capped, rounded up to a multiple of M."""
    n = chebyshev_samples(policy)
    if policy.cap is not None:
        if policy.cap < M:
            raise BudgetError(f"cap {policy.cap} leaves fewer than one sample per symbol (M={M})")
        n = min(n, policy.cap)
    return -(-n // M) * M


def reference_pe(M: int, snr: float, mode) -> float:
    if Mode(mode) is Mode.QUASI_BIORTHOGONAL:
        return closed_form.ser_biorthogonal(M, snr)
    return closed_form.ser_orthogonal(M, snr)


def resolve_policy(policy: BudgetPolicy | None, M: int, snr: float, mode) -> BudgetPolicy:
    policy = policy or BudgetPolicy()
    if policy.p_e_ref is None:
        ref = reference_pe(M, snr, mode)
        if not ref > 0:
            raise BudgetError(f"reference error probability underflows at Es/N0={snr}; MC is infeasible here")
        policy = policy.with_reference(min(ref, 1.0))
    return policy


def _count_block(qr: QrPair, snr: float, mode, size: int, seed: int, stream: int, b: int) -> int:
    V = block_rng(seed, stream, b).standard_normal((size, qr.M))
    return int(np.count_nonzero(region_mask(V, qr, snr, mode)))


def count_hits(qr: QrPair, snr: float, mode, K: int, seed: int, stream: int | None = None, workers: int = 1) -> int:
    """Number of K standardized draws inside the decision region of ``qr``."""
    stream = qr.i if stream is None else stream
    tasks = list(blocks(K, BLOCK))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = ex.map(lambda t: _count_block(qr, snr, mode, t[1], seed, stream, t[0]), tasks)
            return sum(parts)
    return sum(_count_block(qr, snr, mode, size, seed, stream, b) for b, size in tasks)


def estimate_pc_given_si(qr: QrPair, snr: float, mode, K: int, seed: int, workers: int = 1) -> float:
    if K < 1:
        raise ValidationError("K must be at least 1")
    return count_hits(qr, snr, mode, K, seed, workers=workers) / K


def estimate_ser(
    codeset: CodeSet,
    snr: float,
    policy: BudgetPolicy | None = None,
    seed: int = 0,
    workers: int = 1,
    samples: int | None = None,
) -> SerEstimate:
    """Monte Carlo SER with fresh draws for every transmitted symbol.

    ``samples`` overrides the policy and fixes KM directly (rounded up to a
    multiple of M).
    """
    M = codeset.M
    if samples is None:
        total = required_samples(resolve_policy(policy, M, snr, codeset.mode), M)
    else:
        total = -(-int(samples) // M) * M
    K = total // M
    if K < 1:
        raise BudgetError("budget gives fewer than one sample per symbol")
    pcs = []
    for i in range(M):
        qr = factor_symbol(codeset, i)
        pcs.append(count_hits(qr, snr, codeset.mode, K, seed, stream=i, workers=workers) / K)
    pc = np.array(pcs)
    pe_i = 1.0 - pc
    p_e = float(1.0 - pc.mean())
    std_err = math.sqrt(float(np.sum(pe_i * (1.0 - pe_i))) / (K * M * M))
    return SerEstimate(p_e, std_err, K * M, tuple(pcs), "mc", seed)
