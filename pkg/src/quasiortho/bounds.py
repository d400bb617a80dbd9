"""Pairwise error results and union bounds for quasi-(bi)orthogonal code sets.

Two independent routes to the biorthogonal bound are kept on purpose:
:func:`ub_quasi_biortho` works from the code vectors (pair projections), while
:func:`pub_of_kappa` works only from the cross-correlations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_form import f_std, phi, q_func
from .codeset import CodeSet, gram
from .errors import ValidationError

COLLINEAR_TOL = 1e-12


@dataclass(frozen=True)
class PairGeometry:
    rho0: float
    rho1: float
    theta_deg: float
    kappa: float


@dataclass(frozen=True)
class TaylorSensitivity:
    p_ub_at_zero: float
    alpha: float
    ratio: float
    ratio_approx: float
    kappa_sq_norm: float
    prediction: float


def _unit_pair(s_i, s_j):
    s_i = np.asarray(s_i, dtype=float)
    s_j = np.asarray(s_j, dtype=float)
    kappa = float(s_i @ s_j)
    if abs(kappa) >= 1.0 - COLLINEAR_TOL:
        raise ValidationError(f"code vectors are collinear (kappa={kappa:.15g})")
    return s_i, s_j, kappa


def pair_geometry(s_i, s_j) -> PairGeometry:
    """Projections of s_j on the normalized difference/sum directions, and the QPSK rotation angle.

    theta is the angle between s_i and the bisector of the two decision
    directions d_0 = (s_i - s_j)/|s_i - s_j| and d_1 = (s_i + s_j)/|s_i + s_j|.
    """
    s_i, s_j, kappa = _unit_pair(s_i, s_j)
    diff = s_i - s_j
    summ = s_i + s_j
    d0 = diff / np.linalg.norm(diff)
    d1 = summ / np.linalg.norm(summ)
    rho0 = float(d0 @ s_j)
    rho1 = float(d1 @ s_j)
    c = float((d0 + d1) @ s_i) / math.sqrt(2.0)
    theta = math.degrees(math.acos(min(1.0, max(-1.0, c))))
    return PairGeometry(rho0, rho1, theta, kappa)


def rho_from_kappa(kappa):
    kappa = np.asarray(kappa, dtype=float)
    return -np.sqrt((1.0 - kappa) / 2.0), np.sqrt((1.0 + kappa) / 2.0)


def exact_pe_m2_biortho(s_0, s_1, snr: float) -> float:
    """Exact SER of the four-symbol set {+-s_0, +-s_1}."""
    g = pair_geometry(s_0, s_1)
    pc = 1.0
    for rho in (g.rho0, g.rho1):
        pc *= phi(math.sqrt(2.0 * snr) * abs(rho))
    return 1.0 - pc


def exact_pe_m2_ortho(s_0, s_1, snr: float) -> float:
    """Exact SER of the two-symbol set {s_0, s_1}."""
    g = pair_geometry(s_0, s_1)
    return q_func(math.sqrt(2.0 * snr) * abs(g.rho0))


def _pair_rhos(S: np.ndarray):
    """rho_{i,j,0} and rho_{i,j,1} for i < j, from the explicit difference and sum vectors."""
    M = S.shape[1]
    iu, ju = np.triu_indices(M, 1)
    si, sj = S[:, iu], S[:, ju]
    diff = si - sj
    summ = si + sj
    nd = np.linalg.norm(diff, axis=0)
    ns = np.linalg.norm(summ, axis=0)
    if np.any(nd <= math.sqrt(2 * COLLINEAR_TOL)) or np.any(ns <= math.sqrt(2 * COLLINEAR_TOL)):
        raise ValidationError("code set contains a collinear pair")
    rho0 = np.einsum("lk,lk->k", diff, sj) / nd
    rho1 = np.einsum("lk,lk->k", summ, sj) / ns
    return rho0, rho1


def _clamp(raw: float, clamp: bool) -> float:
    return min(raw, 1.0) if clamp else raw


def ub_quasi_biortho(codeset: CodeSet, snr: float, clamp: bool = False) -> float:
    """Union bound on the quasi-biorthogonal SER.

    Each ordered pair (i, j) contributes the exact error probability of the
    reduced four-symbol problem {+-s_i, +-s_j}; the pair terms are symmetric
    so only i < j is evaluated and doubled.  The raw value may exceed 1.
    """
    M = codeset.M
    if M == 1:
        return 0.0
    rho0, rho1 = _pair_rhos(codeset.S)
    a = math.sqrt(2.0 * snr)
    pair = 1.0 - (1.0 - q_func(a * np.abs(rho0))) * (1.0 - q_func(a * np.abs(rho1)))
    return _clamp(float(2.0 * pair.sum() / M), clamp)


def ub_quasi_ortho(codeset: CodeSet, snr: float, clamp: bool = False) -> float:
    M = codeset.M
    if M == 1:
        return 0.0
    rho0, _ = _pair_rhos(codeset.S)
    a = math.sqrt(2.0 * snr)
    return _clamp(float(2.0 * q_func(a * np.abs(rho0)).sum() / M), clamp)


def kappa_vector(codeset: CodeSet) -> np.ndarray:
    return gram(codeset).kappas()


def pub_of_kappa(kappa_vec, M: int, snr: float) -> float:
    """Biorthogonal union bound written in terms of the pairwise correlations only."""
    k = np.asarray(kappa_vec, dtype=float)
    if k.shape != (M * (M - 1) // 2,):
        raise ValidationError(f"kappa vector must have length M(M-1)/2 = {M * (M - 1) // 2}, got {k.shape}")
    if np.any(np.abs(k) >= 1.0):
        raise ValidationError("kappa entries must lie in (-1, 1)")
    prod = phi(np.sqrt(snr * (1.0 - k))) * phi(np.sqrt(snr * (1.0 + k)))
    # sum(1 - prod) rather than (M-1) - sum(prod): same value, no cancellation
    return float(2.0 / M * np.sum(1.0 - prod)) if k.size else 0.0


def pub_at_zero(M: int, snr: float) -> float:
    q = q_func(math.sqrt(snr))
    return (M - 1) * q * (2.0 - q)


def alpha_coefficient(M: int, snr: float) -> float:
    """Per-coordinate second derivative of the kappa-form bound at kappa = 0."""
    s = math.sqrt(snr)
    f = f_std(s)
    return s / M * (s * f * f + f * phi(s) * (snr + 1.0))


def taylor_sensitivity(M: int, snr: float, kappa_vec=None) -> TaylorSensitivity:
    """Second-order behaviour of the kappa-form bound around an orthogonal set.

    The gradient vanishes at kappa = 0 and the Hessian is alpha * I, so the
    quadratic prediction is P_ub(0) + (alpha / 2) * |kappa|^2.
    """
    if not snr > 0:
        raise ValidationError("Es/N0 must be positive")
    p0 = pub_at_zero(M, snr)
    alpha = alpha_coefficient(M, snr)
    k = np.zeros(0) if kappa_vec is None else np.asarray(kappa_vec, dtype=float)
    kk = float(k @ k)
    return TaylorSensitivity(
        p_ub_at_zero=p0,
        alpha=alpha,
        ratio=alpha / p0,
        ratio_approx=snr * snr / (2.0 * M * M),
        kappa_sq_norm=kk,
        prediction=p0 + 0.5 * alpha * kk,
    )
