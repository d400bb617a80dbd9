"""Code sets (unit-norm code vectors as matrix columns) and their Gram matrices."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GenerationError, ValidationError

SCHEMA_VERSION = 1
NORM_TOL = 1e-10
RANK_TOL = 1e-8
EIG_TOL = 1e-10


class Mode(str, enum.Enum):
    QUASI_ORTHOGONAL = "quasi_orthogonal"
    QUASI_BIORTHOGONAL = "quasi_biorthogonal"


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _simplex_eta(M: int) -> float:
    return -1.0 / (M - 1)


def _is_simplex(M: int, eta: float) -> bool:
    return M >= 2 and abs(eta - _simplex_eta(M)) <= 1e-12


@dataclass(frozen=True)
class CodeSet:
    """L x M matrix whose columns are the code vectors s_0 .. s_{M-1}.

    In quasi-biorthogonal mode the negatives -s_i are implied symbols; they
    are never stored.
    """

    S: np.ndarray
    mode: Mode = Mode.QUASI_ORTHOGONAL
    generator: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        S = _readonly(self.S)
        if S.ndim != 2:
            raise ValidationError(f"code matrix must be 2-D, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise ValidationError("code matrix has non-finite entries")
        L, M = S.shape
        if M < 1 or M > L:
            raise ValidationError(f"need 1 <= M <= L, got L={L}, M={M}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "generator", dict(self.generator))

        norms = np.linalg.norm(S, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            j = int(bad[0])
            raise ValidationError(f"unit-norm invariant violated: column {j} has norm {norms[j]:.12g}")

        sv = np.linalg.svd(S, compute_uv=False)
        needed_rank = M - 1 if self.is_simplex else M
        if needed_rank > 0 and sv[needed_rank - 1] <= RANK_TOL:
            raise ValidationError(
                f"linear-independence invariant violated: singular value "
                f"{sv[needed_rank - 1]:.3e} <= {RANK_TOL:g} (required rank {needed_rank})"
            )

    @property
    def L(self) -> int:
        return self.S.shape[0]

    @property
    def M(self) -> int:
        return self.S.shape[1]

    @property
    def n_symbols(self) -> int:
        return 2 * self.M if self.mode is Mode.QUASI_BIORTHOGONAL else self.M

    @property
    def is_simplex(self) -> bool:
        g = self.generator
        if g.get("name") != "equicorrelated":
            return False
        eta = g.get("params", {}).get("eta")
        return eta is not None and _is_simplex(self.S.shape[1], float(eta))

    def with_mode(self, mode) -> CodeSet:
        return CodeSet(self.S, Mode(mode), self.generator)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric PSD Gram matrix with unit diagonal."""

    W: np.ndarray

    def __post_init__(self):
        W = _readonly(self.W)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValidationError(f"correlation matrix must be square, got {W.shape}")
        if not np.array_equal(W, W.T):
            raise ValidationError("correlation matrix is not symmetric")
        if not np.all(np.diag(W) == 1.0):
            raise ValidationError("correlation matrix diagonal must be exactly 1")
        if W.shape[0] > 1 and np.linalg.eigvalsh(W)[0] < -EIG_TOL:
            raise ValidationError("correlation matrix has a negative eigenvalue")
        object.__setattr__(self, "W", W)

    @property
    def M(self) -> int:
        return self.W.shape[0]

    def kappas(self) -> np.ndarray:
        """Upper-triangle entries ordered (0,1), (0,2), ..., (0,M-1), (1,2), ..."""
        return self.W[np.triu_indices(self.M, 1)].copy()

    def max_abs_offdiag(self) -> float:
        k = self.kappas()
        return float(np.abs(k).max()) if k.size else 0.0

    def mean_abs_offdiag(self) -> float:
        k = self.kappas()
        return float(np.abs(k).mean()) if k.size else 0.0

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.W)[0])


def gram(codeset: CodeSet) -> CorrelationMatrix:
    S = codeset.S
    W = S.T @ S
    W = 0.5 * (W + W.T)
    d = np.diag(W)
    if np.any(np.abs(d - 1.0) > NORM_TOL):
        raise ValidationError("Gram diagonal deviates from 1 beyond tolerance")
    np.fill_diagonal(W, 1.0)
    return CorrelationMatrix(W)


def sqrt_psd(W: np.ndarray) -> np.ndarray:
    """Symmetric square root V diag(sqrt(lam)) V^T; tiny negative eigenvalues are clamped."""
    lam, V = np.linalg.eigh(W)
    if lam[0] < -EIG_TOL:
        raise ValidationError(f"matrix is not PSD (min eigenvalue {lam[0]:.3e})")
    lam = np.clip(lam, 0.0, None)
    U = (V * np.sqrt(lam)) @ V.T
    return 0.5 * (U + U.T)


def _embed(U: np.ndarray, L: int) -> np.ndarray:
    M = U.shape[0]
    if L < M:
        raise ValidationError(f"need M <= L, got M={M}, L={L}")
    S = np.zeros((L, M))
    S[:M] = U
    return S


def make_orthogonal(M: int, L: int | None = None, mode=Mode.QUASI_ORTHOGONAL) -> CodeSet:
    L = M if L is None else L
    if M < 1 or M > L:
        raise ValidationError(f"need 1 <= M <= L, got M={M}, L={L}")
    return CodeSet(np.eye(L, M), mode, {"name": "orthogonal", "seed": None, "params": {}})


def equicorrelated_factor(M: int, eta: float) -> np.ndarray:
    """The M x M symmetric square root of eta*11^T + (1-eta)I, built from its two distinct entries."""
    c = (math.sqrt(1.0 + eta * (M - 1)) - math.sqrt(1.0 - eta)) / M
    d = math.sqrt(1.0 - eta) + c
    U = np.full((M, M), c)
    np.fill_diagonal(U, d)
    return U


def make_equicorrelated(M: int, eta: float, L: int | None = None, mode=Mode.QUASI_ORTHOGONAL) -> CodeSet:
    if M < 1:
        raise ValidationError("M must be positive")
    lo = _simplex_eta(M) if M > 1 else -1.0
    if not (eta < 1.0) or (eta < lo and not _is_simplex(M, eta)):
        raise ValidationError(
            f"invalid correlation eta={eta!r}: the Gram matrix needs eta in [{lo:.6g}, 1) "
            "to have no negative eigenvalue"
        )
    if _is_simplex(M, eta):
        eta = _simplex_eta(M)
    U = equicorrelated_factor(M, eta)
    # tiny renormalization; the closed-form entries are exact up to rounding
    U = U / np.linalg.norm(U, axis=0)
    return CodeSet(
        _embed(U, M if L is None else L),
        mode,
        {"name": "equicorrelated", "seed": None, "params": {"eta": float(eta)}},
    )


def make_random_quasi(
    M: int,
    L: int | None = None,
    rho_max: float = 0.2,
    seed: int = 0,
    mode=Mode.QUASI_ORTHOGONAL,
    max_tries: int = 10_000,
) -> CodeSet:
    """Random code set whose Gram entries are uniform on [-rho_max, rho_max].

    Symmetric draws are rejected until the matrix is PSD; the code matrix is
    then its symmetric square root, zero-padded to L rows.
    """
    L = M if L is None else L
    if not 0.0 <= rho_max < 1.0:
        raise ValidationError(f"rho_max must lie in [0, 1), got {rho_max}")
    if M < 1 or M > L:
        raise ValidationError(f"need 1 <= M <= L, got M={M}, L={L}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(M, 1)
    for attempt in range(1, max_tries + 1):
        W = np.eye(M)
        W[iu] = rng.uniform(-rho_max, rho_max, size=iu[0].size)
        W.T[iu] = W[iu]
        if M == 1 or np.linalg.eigvalsh(W)[0] >= -EIG_TOL:
            break
    else:
        raise GenerationError(f"no PSD correlation matrix found in {max_tries} draws (rho_max={rho_max}, M={M})")
    S = sqrt_psd(W)
    S = S / np.linalg.norm(S, axis=0)
    return CodeSet(
        _embed(S, L),
        mode,
        {"name": "random", "seed": int(seed), "params": {"rho_max": float(rho_max), "tries": attempt}},
    )


def _pm1_search(L: int, n_restarts: int, rng: np.random.Generator):
    tau = np.arange(1, L)
    idx = np.arange(L)
    plus = (idx[:, None] + tau) % L
    minus = (idx[:, None] - tau) % L
    best_key, best_s = None, None
    for _ in range(n_restarts):
        s = rng.choice(np.array([-1.0, 1.0]), size=L)
        A = np.array([s @ np.roll(s, -t) for t in tau])
        key = (np.abs(A).max(), float(A @ A))
        while True:
            # flipping s_k shifts every periodic autocorrelation by -2 s_k (s_{k+t} + s_{k-t})
            cand = A + (-2.0 * s[:, None]) * (s[plus] + s[minus])
            mx = np.abs(cand).max(axis=1)
            ss = np.einsum("ij,ij->i", cand, cand)
            k = int(np.lexsort((ss, mx))[0])
            if (mx[k], ss[k]) >= key:
                break
            s[k] = -s[k]
            A = cand[k]
            key = (mx[k], ss[k])
        # circulant singular values are the DFT magnitudes
        if np.abs(np.fft.fft(s)).min() / math.sqrt(L) <= RANK_TOL:
            continue
        if best_key is None or key < best_key:
            best_key, best_s = key, s.copy()
    return best_s


def make_circular_shift_pm1(L: int, n_restarts: int = 50, seed: int = 0, mode=Mode.QUASI_ORTHOGONAL) -> CodeSet:
    """M = L code set built from circular shifts of one +-1/sqrt(L) sequence.

    The base sequence comes from random-restart greedy bit flipping that
    minimizes the largest periodic autocorrelation sidelobe (ties broken by
    sidelobe energy).
    """
    if L < 2 or n_restarts < 1:
        raise ValidationError("need L >= 2 and n_restarts >= 1")
    s = _pm1_search(L, n_restarts, np.random.default_rng(seed))
    if s is None:
        raise ValidationError(f"no +-1 sequence of length {L} has linearly independent circular shifts")
    S = np.column_stack([np.roll(s, j) for j in range(L)]) / math.sqrt(L)
    return CodeSet(S, mode, {"name": "circular_shift_pm1", "seed": int(seed), "params": {"n_restarts": int(n_restarts)}})


# -- persistence ---------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(codeset: CodeSet) -> str:
    gen = codeset.generator or {}
    header = {
        "schema_version": SCHEMA_VERSION,
        "mode": codeset.mode.value,
        "L": codeset.L,
        "M": codeset.M,
        "generator": {
            "name": gen.get("name"),
            "seed": gen.get("seed"),
            "params": gen.get("params", {}),
        },
    }
    head = json.dumps(header, indent=2)[:-2]
    cols = ",\n    ".join("[" + ", ".join(_fmt(x) for x in col) + "]" for col in codeset.S.T)
    return f"{head},\n  \"columns\": [\n    {cols}\n  ]\n}}\n"


def save(codeset: CodeSet, path) -> None:
    Path(path).write_text(dumps(codeset))


def loads(text: str) -> CodeSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed code-set file: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("malformed code-set file: top level must be an object")
    missing = [k for k in ("schema_version", "mode", "L", "M", "columns") if k not in doc]
    if missing:
        raise ValidationError(f"malformed code-set file: missing {', '.join(missing)}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema_version {doc['schema_version']!r}")
    try:
        cols = np.array(doc["columns"], dtype=float)
        mode = Mode(doc["mode"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed code-set file: {exc}") from None
    L, M = int(doc["L"]), int(doc["M"])
    if cols.shape != (M, L):
        raise ValidationError(f"columns have shape {cols.shape}, expected {M} columns of length {L}")
    gen = doc.get("generator") or {}
    return CodeSet(cols.T, mode, gen)


def load(path) -> CodeSet:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read code-set file: {exc}") from None
    return loads(text)
