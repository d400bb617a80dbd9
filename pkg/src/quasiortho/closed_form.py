"""One-dimensional quadrature SER for orthogonal, biorthogonal and equi-correlated code sets."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .errors import ValidationError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# f(10) < 8e-23, so the standard normal density is negligible outside [-10, 10]
_TAIL = 10.0


def q_func(x):
    """Gaussian tail probability Q(x) = 1 - Phi(x)."""
    return special.ndtr(-np.asarray(x, dtype=float)) if np.ndim(x) else float(special.ndtr(-float(x)))


def phi(x):
    """Standard normal CDF."""
    return special.ndtr(np.asarray(x, dtype=float)) if np.ndim(x) else float(special.ndtr(float(x)))


def f_std(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def _check_snr(snr: float) -> float:
    snr = float(snr)
    if not (snr > 0 and math.isfinite(snr)):
        raise ValidationError(f"Es/N0 must be finite and positive, got {snr}")
    return snr


def _quad(fn, lo: float, hi: float, peak: float) -> float:
    pts = [p for p in (peak,) if lo < p < hi]
    val, _ = integrate.quad(fn, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-11, limit=400)
    return val


def ser_orthogonal(M: int, snr: float) -> float:
    """SER of M equiprobable orthogonal signals at linear Es/N0.

    Integrates the error probability directly,
    ``P_e = int f(v) [1 - Phi(v + sqrt(2 Es/N0))^(M-1)] dv``,
    so small values keep their relative accuracy.
    """
    if M < 2:
        raise ValidationError("orthogonal signaling needs M >= 2")
    snr = _check_snr(snr)
    a = math.sqrt(2.0 * snr)

    def integrand(v):
        # 1 - Phi^(M-1) without cancellation
        return f_std(v) * -math.expm1((M - 1) * special.log_ndtr(v + a))

    return _quad(integrand, -_TAIL, _TAIL + a, -a / 2.0)


def ser_biorthogonal(M: int, snr: float) -> float:
    """SER of the 2M-symbol biorthogonal set built from M orthogonal vectors."""
    if M < 1:
        raise ValidationError("biorthogonal signaling needs M >= 1")
    snr = _check_snr(snr)
    a = math.sqrt(2.0 * snr)
    tail = q_func(a)  # v_0 below -a: detector picks -s_i
    if M == 1:
        return tail

    def integrand(v):
        # Phi(t) - Phi(-t) = 1 - 2 Q(t) with t = v + a > 0
        return f_std(v) * -math.expm1((M - 1) * math.log1p(-2.0 * special.ndtr(-(v + a))))

    return tail + _quad(integrand, -a, _TAIL, -a / 2.0)


def ser_equicorrelated(M: int, eta: float, snr: float) -> float:
    """Equal pairwise correlation eta acts as an Es/N0 scaling by (1 - eta)."""
    if M < 2:
        raise ValidationError("equi-correlated signaling needs M >= 2")
    lo = -1.0 / (M - 1)
    if not (lo - 1e-12 <= eta < 1.0):
        raise ValidationError(f"eta={eta} outside [{lo:.6g}, 1)")
    return ser_orthogonal(M, snr * (1.0 - eta))
