"""Dense linear-algebra contracts shared by the model-specific modules.

Thin, checked wrappers around LAPACK (via numpy) plus an arbitrary-precision
fallback (via mpmath) for the ill-conditioned asymptotic computations.  Every
eigendecomposition returns an EigenResult whose residual is verified against
the active precision policy, so callers never consume silently-bad spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np


class EigenError(RuntimeError):
    """Base class for failures of the checked decompositions."""


class NonHermitianError(EigenError):
    pass


class SpectrumNotRealError(EigenError):
    """A matrix expected to have real spectrum produced eigenvalues with
    imaginary parts above tolerance."""


class PairingError(EigenError):
    """A spectrum expected to be symmetric under negation failed to pair up."""


class NotPositiveDefiniteError(EigenError):
    def __init__(self, smallest: float):
        super().__init__(f"matrix is not positive definite (smallest eigenvalue {smallest:.3e})")
        self.smallest_eigenvalue = smallest


@dataclass(frozen=True)
class PrecisionConfig:
    """Arithmetic mode and tolerances for the checked decompositions.

    mode is "double" or "extended"; extended mode carries the mantissa width
    in bits (>= 64) and routes through mpmath.
    """

    mode: str = "double"
    bits: int = 64
    tol_imag: float = 1e-8
    tol_residual: float = 1e-10

    def __post_init__(self):
        if self.mode not in ("double", "extended"):
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.bits < 64:
            raise ValueError("extended precision needs bits >= 64")
        if not (self.tol_imag > 0 and self.tol_residual > 0):
            raise ValueError("tolerances must be positive")

    @classmethod
    def parse(cls, text: str) -> "PrecisionConfig":
        """Parse "double" or "extended:<bits>"."""
        if text == "double":
            return cls()
        if text.startswith("extended"):
            bits = 128
            if ":" in text:
                bits = int(text.split(":", 1)[1])
            return cls(mode="extended", bits=bits)
        raise ValueError(f"cannot parse precision spec {text!r}")


DEFAULT_PRECISION = PrecisionConfig()


@dataclass(frozen=True)
class EigenResult:
    """Descending-sorted spectrum with unit-norm column eigenvectors.

    residual = max_k ||M v_k - mu_k v_k|| / ||M||, checked against the policy.
    pairing_residual is populated when a +/- symmetric spectrum was requested.
    """

    values: np.ndarray
    vectors: np.ndarray
    residual: float
    pairing_residual: float | None = None
    imag_max: float = 0.0


def _mp_matrix(M: np.ndarray) -> mpmath.matrix:
    out = mpmath.matrix(M.shape[0], M.shape[1])
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            out[i, j] = mpmath.mpc(M[i, j])
    return out


def _np_from_mp(M, shape) -> np.ndarray:
    out = np.empty(shape, dtype=complex)
    for i in range(shape[0]):
        for j in range(shape[1]):
            out[i, j] = complex(M[i, j])
    return out


def _sorted_descending(values: np.ndarray, vectors: np.ndarray):
    # stable sort; near-ties (1e-12 relative) broken by eigenvector entries so
    # repeated runs are bit-identical
    scale = max(np.max(np.abs(values)), 1.0)
    key = np.round(values / (1e-12 * scale))
    order = np.lexsort(tuple(np.abs(vectors[k]) for k in range(vectors.shape[0] - 1, -1, -1)) + (-key,))
    return values[order], vectors[:, order]


def _residual(M, values, vectors) -> float:
    norm = np.linalg.norm(M, 2)
    if norm == 0:
        return 0.0
    r = M @ vectors - vectors * values[None, :]
    return float(np.max(np.linalg.norm(r, axis=0)) / norm)


def eig_hermitian(M: np.ndarray, prec: PrecisionConfig = DEFAULT_PRECISION) -> EigenResult:
    """Checked Hermitian eigendecomposition, eigenvalues sorted descending."""
    M = np.asarray(M, dtype=complex)
    norm = max(np.linalg.norm(M, 2), 1.0)
    herm_defect = np.linalg.norm(M - M.conj().T, 2)
    if herm_defect > prec.tol_residual * norm:
        raise NonHermitianError(
            f"input is not Hermitian: ||M - M*|| = {herm_defect:.3e} (norm {norm:.3e})"
        )
    Mh = 0.5 * (M + M.conj().T)
    if prec.mode == "extended":
        with mpmath.workprec(prec.bits):
            E, Q = mpmath.eighe(_mp_matrix(Mh))
            values = np.array([float(E[k]) for k in range(Mh.shape[0])])
            vectors = _np_from_mp(Q, Mh.shape)
    else:
        values, vectors = np.linalg.eigh(Mh)
    values, vectors = _sorted_descending(values, vectors)
    res = _residual(Mh, values, vectors)
    if res > prec.tol_residual:
        raise EigenError(f"eigendecomposition residual {res:.3e} above {prec.tol_residual:g}")
    return EigenResult(values=values, vectors=vectors, residual=res)


def eig_general_real_spectrum(M: np.ndarray,
                              prec: PrecisionConfig = DEFAULT_PRECISION,
                              check_pairing: bool = False) -> EigenResult:
    """Eigendecomposition of a (possibly non-normal) matrix whose spectrum is real.

    Imaginary parts above tol_imag * ||M|| raise SpectrumNotRealError; otherwise
    they are discarded.  With check_pairing=True the spectrum must additionally
    be symmetric under negation (greedy match by absolute value) and the pairing
    residual is reported.
    """
    M = np.asarray(M, dtype=complex)
    norm = max(np.linalg.norm(M, 2), 1.0)
    if prec.mode == "extended":
        with mpmath.workprec(prec.bits):
            E, QL = mpmath.eig(_mp_matrix(M))
            values_c = np.array([complex(E[k]) for k in range(M.shape[0])])
            vectors = _np_from_mp(QL, M.shape)
    else:
        values_c, vectors = np.linalg.eig(M)
    imag_max = float(np.max(np.abs(values_c.imag)))
    if imag_max > prec.tol_imag * norm:
        raise SpectrumNotRealError(
            f"max |Im eigenvalue| = {imag_max:.3e} exceeds {prec.tol_imag:g} * ||M||"
        )
    values = values_c.real
    vectors = vectors / np.linalg.norm(vectors, axis=0)[None, :]
    values, vectors = _sorted_descending(values, vectors)
    pairing = None
    if check_pairing:
        up = np.sort(values[values >= 0])[::-1]
        down = np.sort(-values[values < 0])[::-1]
        if up.size != down.size:
            raise PairingError(f"spectrum splits {up.size}/{down.size} across zero")
        pairing = float(np.max(np.abs(up - down)) / norm) if up.size else 0.0
        if pairing > prec.tol_imag:
            raise PairingError(f"+/- pairing residual {pairing:.3e} above {prec.tol_imag:g}")
    res = _residual(M, values, vectors)
    # the discarded imaginary parts enter the residual, so the bound here is
    # tol_imag rather than tol_residual
    if res > prec.tol_imag:
        raise EigenError(f"eigendecomposition residual {res:.3e} above {prec.tol_imag:g}")
    return EigenResult(values=values, vectors=vectors, residual=res,
                       pairing_residual=pairing, imag_max=imag_max)


def sqrt_posdef(M: np.ndarray, prec: PrecisionConfig = DEFAULT_PRECISION) -> np.ndarray:
    """Hermitian square root of a Hermitian positive definite matrix."""
    eres = eig_hermitian(M, prec)
    if eres.values[-1] <= 0:
        raise NotPositiveDefiniteError(float(eres.values[-1]))
    S = (eres.vectors * np.sqrt(eres.values)[None, :]) @ eres.vectors.conj().T
    return 0.5 * (S + S.conj().T)


def leading_principal_minors(M: np.ndarray, k_max: int):
    """Determinants of the upper-left k x k blocks, k = 1..k_max.

    Returns (minors, singular_flags); an exactly singular leading block is
    reported as 0 with its flag set instead of raising.
    """
    M = np.asarray(M, dtype=complex)
    if not 1 <= k_max <= M.shape[0]:
        raise ValueError(f"k_max must be in 1..{M.shape[0]}")
    minors = np.empty(k_max, dtype=complex)
    flags = np.zeros(k_max, dtype=bool)
    for k in range(1, k_max + 1):
        d = np.linalg.det(M[:k, :k])
        minors[k - 1] = d
        flags[k - 1] = (d == 0)
    return minors, flags


def finite_diff_jacobian(f, x, step: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of f: R^m -> R^m at x.

    Default step is cbrt(machine eps) scaled per component by max(1, |x_i|).
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    fx = np.asarray(f(x), dtype=float)
    if fx.size != m:
        raise ValueError("f must map R^m to R^m")
    base = np.finfo(float).eps ** (1.0 / 3.0)
    J = np.empty((m, m))
    for j in range(m):
        hj = step if step is not None else base * max(1.0, abs(x[j]))
        xp = x.copy(); xp[j] += hj
        xm = x.copy(); xm[j] -= hj
        J[:, j] = (np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (2 * hj)
    return J


def singular_values(M: np.ndarray, prec: PrecisionConfig = DEFAULT_PRECISION) -> np.ndarray:
    """Singular values sorted descending, honoring the precision mode."""
    M = np.asarray(M, dtype=complex)
    if prec.mode == "extended":
        with mpmath.workprec(prec.bits):
            S = mpmath.svd_c(_mp_matrix(M), compute_uv=False)
            sv = np.array([float(S[k]) for k in range(min(M.shape))])
        return np.sort(sv)[::-1]
    return np.linalg.svd(M, compute_uv=False)
