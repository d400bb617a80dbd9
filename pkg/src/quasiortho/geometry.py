"""Per-symbol QR geometry and the ML decision-region predicates in standardized coordinates.

For transmitted symbol i the columns are rotated so s_i comes first, then
factored as S_i = Q R with a non-negative diagonal and r_00 = 1.  Projecting
the received vector onto Q and standardizing gives v ~ N(0, I); the region of
correct decisions is then a set of triangular half-space constraints on v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codeset import CodeSet, Mode
from .errors import NearDependenceError, ValidationError

NEAR_SINGULAR = 1e-8


@dataclass(frozen=True)
class QrPair:
    Q: np.ndarray
    R: np.ndarray
    i: int = 0

    def __post_init__(self):
        if self.R[0, 0] != 1.0:
            raise ValidationError("QR normalization requires r_00 == 1")
        if np.any(np.diag(self.R) < 0):
            raise ValidationError("QR normalization requires a non-negative diagonal")
        for a in (self.Q, self.R):
            a.setflags(write=False)

    @property
    def M(self) -> int:
        return self.R.shape[0]


def rotate_columns(S: np.ndarray, i: int) -> np.ndarray:
    """Columns reordered as [s_i, s_{i+1}, ..., s_{M-1}, s_0, ..., s_{i-1}]."""
    M = S.shape[1]
    if not 0 <= i < M:
        raise IndexError(f"symbol index {i} out of range for M={M}")
    return np.roll(S, -i, axis=1)


def qr_nonneg(S_i: np.ndarray, i: int = 0, allow_rank_deficient: bool = False) -> QrPair:
    """Householder QR of the rotated code matrix with diag(R) >= 0 and r_00 = 1.

    With ``allow_rank_deficient`` the last diagonal entry may vanish (the
    simplex set spans only M-1 dimensions); it is then set to exactly zero.
    """
    S_i = np.asarray(S_i, dtype=float)
    M = S_i.shape[1]
    Q, R = np.linalg.qr(S_i, mode="reduced")
    sign = np.where(np.diag(R) < 0, -1.0, 1.0)
    Q = Q * sign
    R = sign[:, None] * R
    R = np.triu(R)
    for j in range(M):
        if R[j, j] < NEAR_SINGULAR:
            if allow_rank_deficient and j == M - 1:
                R[j, j] = 0.0
            else:
                raise NearDependenceError(j, float(R[j, j]))
    # s_i has unit norm, so r_00 differs from 1 only by rounding
    R[0, 0] = 1.0
    return QrPair(Q, R, int(i))


def factor_symbol(codeset: CodeSet, i: int) -> QrPair:
    return qr_nonneg(rotate_columns(codeset.S, i), i, allow_rank_deficient=codeset.is_simplex)


def factor_all(codeset: CodeSet) -> list[QrPair]:
    return [factor_symbol(codeset, i) for i in range(codeset.M)]


def _offset(snr: float) -> float:
    return math.sqrt(2.0 * snr)


def upper_limit(j: int, v_prefix, R: np.ndarray, snr: float) -> float:
    v = np.asarray(v_prefix, dtype=float)
    s = float(R[1:j, j] @ v[1:j]) if j > 1 else 0.0
    return ((1.0 - R[0, j]) * (v[0] + _offset(snr)) - s) / R[j, j]


def lower_limit(j: int, v_prefix, R: np.ndarray, snr: float) -> float:
    v = np.asarray(v_prefix, dtype=float)
    s = float(R[1:j, j] @ v[1:j]) if j > 1 else 0.0
    return (-(1.0 + R[0, j]) * (v[0] + _offset(snr)) - s) / R[j, j]


def in_region(v, qr: QrPair, snr: float, mode=Mode.QUASI_ORTHOGONAL) -> bool:
    """Scalar membership test for one standardized vector, written with the limit formulas."""
    v = np.asarray(v, dtype=float)
    R = qr.R
    biortho = Mode(mode) is Mode.QUASI_BIORTHOGONAL
    if biortho and not v[0] > -_offset(snr):
        return False
    for j in range(1, qr.M):
        if R[j, j] == 0.0:
            # dependent column: the constraint no longer involves v_j
            s = float(R[1:j, j] @ v[1:j])
            w = v[0] + _offset(snr)
            if not (1.0 - R[0, j]) * w - s > 0.0:
                return False
            if biortho and not -(1.0 + R[0, j]) * w - s < 0.0:
                return False
            continue
        if not v[j] < upper_limit(j, v, R, snr):
            return False
        if biortho and not v[j] > lower_limit(j, v, R, snr):
            return False
    return True


def region_mask(V: np.ndarray, qr: QrPair, snr: float, mode=Mode.QUASI_ORTHOGONAL) -> np.ndarray:
    """Vectorized membership for the rows of V (shape K x M).

    Same constraints as :func:`in_region`, multiplied through by r_jj >= 0 so a
    whole batch needs one matrix product.
    """
    V = np.asarray(V, dtype=float)
    R = qr.R
    M = qr.M
    w = V[:, 0] + _offset(snr)
    if M == 1:
        ok = np.ones(V.shape[0], dtype=bool)
    else:
        inner = np.triu(R[1:, 1:], 1)
        T = V[:, 1:] @ inner
        diag = np.diag(R)[1:]
        lhs = V[:, 1:] * diag
        r0 = R[0, 1:]
        ok = np.all(lhs < (1.0 - r0) * w[:, None] - T, axis=1)
        if Mode(mode) is Mode.QUASI_BIORTHOGONAL:
            ok &= np.all(lhs > -(1.0 + r0) * w[:, None] - T, axis=1)
    if Mode(mode) is Mode.QUASI_BIORTHOGONAL:
        ok &= w > 0.0
    return ok


def standardize(y: np.ndarray, snr: float) -> np.ndarray:
    """Map projected received vectors y = Q^T x (unit symbol energy) to standardized v."""
    sigma = math.sqrt(0.5 / snr)
    v = np.array(y, dtype=float) / sigma
    v[..., 0] -= _offset(snr)
    return v


def unstandardize(v: np.ndarray, snr: float) -> np.ndarray:
    sigma = math.sqrt(0.5 / snr)
    y = np.array(v, dtype=float)
    y[..., 0] += _offset(snr)
    return y * sigma
