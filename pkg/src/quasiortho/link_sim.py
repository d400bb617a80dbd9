"""Brute-force AWGN link simulation with ML detection in the ambient L-dimensional space.

Es is fixed to 1 and N0 = 1/snr, so the noise standard deviation per
dimension is sqrt(1 / (2 snr)).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import block_rng, blocks
from .codeset import CodeSet, Mode
from .errors import ValidationError
from .geometry import factor_symbol, region_mask, standardize

SIM_STREAM = 1 << 20
SIM_BLOCK = 1 << 15


@dataclass(frozen=True)
class SimResult:
    errors: int
    trials: int
    p_e_hat: float
    std_err: float
    seed: int | None = None


def detect_quasi_ortho(x, S: np.ndarray):
    """argmax_i s_i^T x (first index on ties). Accepts one vector or a batch of rows."""
    z = np.asarray(x, dtype=float) @ S
    return np.argmax(z, axis=-1)


def detect_quasi_biortho(x, S: np.ndarray):
    """(k, sign) with k = argmax |s_i^T x| and sign of z_k, sign(0) = +1."""
    z = np.asarray(x, dtype=float) @ S
    k = np.argmax(np.abs(z), axis=-1)
    zk = np.take_along_axis(np.atleast_2d(z), np.atleast_1d(k)[:, None], axis=-1)[:, 0]
    sign = np.where(zk < 0, -1, 1)
    if np.ndim(k) == 0:
        return int(k), int(sign[0])
    return k, sign


def draw_block(codeset: CodeSet, snr: float, size: int, seed: int, b: int):
    """Transmitted indices, signs and received vectors for one trial block."""
    rng = block_rng(seed, SIM_STREAM, b)
    M, L = codeset.M, codeset.L
    idx = rng.integers(0, M, size=size)
    if codeset.mode is Mode.QUASI_BIORTHOGONAL:
        sign = np.where(rng.integers(0, 2, size=size) == 1, -1, 1)
    else:
        sign = np.ones(size, dtype=int)
    noise = rng.standard_normal((size, L)) * math.sqrt(0.5 / snr)
    x = codeset.S[:, idx].T * sign[:, None] + noise
    return idx, sign, x


def decision_errors(codeset: CodeSet, idx, sign, x) -> np.ndarray:
    if codeset.mode is Mode.QUASI_BIORTHOGONAL:
        k, s = detect_quasi_biortho(x, codeset.S)
        return (k != idx) | (s != sign)
    return detect_quasi_ortho(x, codeset.S) != idx


def _block_errors(codeset, snr, size, seed, b) -> int:
    idx, sign, x = draw_block(codeset, snr, size, seed, b)
    return int(np.count_nonzero(decision_errors(codeset, idx, sign, x)))


def simulate_ser(codeset: CodeSet, snr: float, trials: int, seed: int = 0, workers: int = 1) -> SimResult:
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    if not snr > 0:
        raise ValidationError("Es/N0 must be positive")
    tasks = list(blocks(int(trials), SIM_BLOCK))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            errors = sum(ex.map(lambda t: _block_errors(codeset, snr, t[1], seed, t[0]), tasks))
    else:
        errors = sum(_block_errors(codeset, snr, size, seed, b) for b, size in tasks)
    p = errors / trials
    return SimResult(errors, int(trials), p, math.sqrt(p * (1.0 - p) / trials), seed)


def region_correct(codeset: CodeSet, snr: float, idx, sign, x) -> np.ndarray:
    """Correct-decision flags for the same draws, judged by the QR region predicate.

    A trial sending -s_i is mapped to the mirrored trial sending +s_i (the
    detector is odd-symmetric), projected on Q_i and standardized.
    """
    out = np.empty(len(idx), dtype=bool)
    xs = np.asarray(x) * np.asarray(sign)[:, None]
    for i in np.unique(idx):
        sel = idx == i
        qr = factor_symbol(codeset, int(i))
        out[sel] = region_mask(standardize(xs[sel] @ qr.Q, snr), qr, snr, codeset.mode)
    return out
