"""Shared domain types and scalar/matrix builders for the BC_n particle systems.

Two dual integrable models live here: a hyperbolic Sutherland-type system with
phase points (q, p) and a rational Ruijsenaars-Schneider-van Diejen (RSvD)
system with phase points (lambda, theta).  Position-type coordinates of both
are confined to the open Weyl chamber x_1 > ... > x_n > 0.  All matrices are
dense complex of size N x N with N = 2n.

Everything in this module is a pure function of its inputs; phase-point
containers freeze their arrays after validation, so values are safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Absolute margin kept from the chamber walls (consecutive gaps and x_n > 0).
#: Guards every 1/sinh and 1/(lambda_a +- lambda_b) singularity.
EPS_CHAMBER = 1e-9


class CouplingError(ValueError):
    """A coupling parameter violates its sign constraint."""


class ChamberError(ValueError):
    """A position-type vector is outside the open Weyl chamber."""


class DomainError(ValueError):
    """A scalar argument is outside the domain of the requested function."""


def _frozen(x, dtype=float) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# couplings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Couplings:
    """RSvD coupling triple (mu, nu, kappa) with mu < 0, nu > 0, kappa >= 0.

    The Sutherland constants are always derived, never set independently:

        g^2 = mu^2,   g1^2 = nu*kappa/2,   g2^2 = (nu - kappa)^2/2,

    which guarantees g^2 > 0 and g1^2 + g2^2 > 0 on the valid domain.
    """

    mu: float
    nu: float
    kappa: float

    def __post_init__(self):
        if not np.isfinite([self.mu, self.nu, self.kappa]).all():
            raise CouplingError("couplings must be finite")
        if not self.mu < 0:
            raise CouplingError(f"mu must be negative, got mu={self.mu}")
        if not self.nu > 0:
            raise CouplingError(f"nu must be positive, got nu={self.nu}")
        if not self.kappa >= 0:
            raise CouplingError(f"kappa must be non-negative, got kappa={self.kappa}")
        assert self.g_sq > 0 and self.g1_sq + self.g2_sq > 0

    @property
    def g_sq(self) -> float:
        return self.mu ** 2

    @property
    def g1_sq(self) -> float:
        return 0.5 * self.nu * self.kappa

    @property
    def g2_sq(self) -> float:
        return 0.5 * (self.nu - self.kappa) ** 2


def couplings_from_rsvd(mu: float, nu: float, kappa: float) -> Couplings:
    """Build the coupling triple, enforcing mu < 0, nu > 0, kappa >= 0."""
    return Couplings(float(mu), float(nu), float(kappa))


# ---------------------------------------------------------------------------
# chamber and phase points
# ---------------------------------------------------------------------------

def validate_chamber(x, margin: float = EPS_CHAMBER) -> bool:
    """True iff x_1 > ... > x_n > 0 strictly, with the given absolute margin."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("chamber vector must be a non-empty 1-d array")
    if not np.isfinite(x).all():
        return False
    if x[-1] <= margin:
        return False
    return bool(np.all(np.diff(x) < -margin))


def require_chamber(x, margin: float = EPS_CHAMBER, what: str = "position vector"):
    if not validate_chamber(x, margin):
        raise ChamberError(
            f"{what} {np.asarray(x)} is not strictly decreasing and positive "
            f"(margin {margin:g})"
        )


@dataclass(frozen=True)
class PhasePointS:
    """Sutherland phase point: positions q in the chamber, momenta p free."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q))
        object.__setattr__(self, "p", _frozen(self.p))
        require_chamber(self.q, what="q")
        if self.p.shape != self.q.shape:
            raise ValueError("q and p must have the same length")

    @property
    def n(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class PhasePointR:
    """RSvD phase point: action-type positions lambda in the chamber, theta free."""

    lam: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", _frozen(self.lam))
        object.__setattr__(self, "theta", _frozen(self.theta))
        require_chamber(self.lam, what="lambda")
        if self.theta.shape != self.lam.shape:
            raise ValueError("lambda and theta must have the same length")

    @property
    def n(self) -> int:
        return self.lam.size


@dataclass(frozen=True)
class AsymptoticState:
    """Free asymptotic datum (x, y) with sign-ordered momenta y.

    sign=+1 requires y_1 > ... > y_n > 0; sign=-1 requires y_1 < ... < y_n < 0.
    """

    x: np.ndarray
    y: np.ndarray
    sign: int

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "y", _frozen(self.y))
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have the same length")
        if not validate_chamber(self.sign * self.y):
            raise ChamberError(
                f"y={self.y} violates the sign-{self.sign:+d} asymptotic ordering"
            )

    @property
    def n(self) -> int:
        return self.x.size


# ---------------------------------------------------------------------------
# matrix builders
# ---------------------------------------------------------------------------

def build_C(n: int) -> np.ndarray:
    """Block anti-diagonal involution [[0, 1_n], [1_n, 0]]; C^2 = 1, C* = C."""
    if n < 1:
        raise ValueError("n must be >= 1")
    C = np.zeros((2 * n, 2 * n), dtype=complex)
    C[:n, n:] = np.eye(n)
    C[n:, :n] = np.eye(n)
    return C


def build_E(n: int) -> np.ndarray:
    """Column vector (1,...,1,-1,...,-1); satisfies CE + E = 0 and E*E = 2n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.concatenate([np.ones(n), -np.ones(n)]).astype(complex)


def build_xi(V: np.ndarray, c: Couplings) -> np.ndarray:
    """Anti-Hermitian orbit element i*mu*(V V* - 1_N) + i*(mu - nu)*C."""
    V = np.asarray(V, dtype=complex)
    if V.ndim != 1 or V.size % 2 != 0 or V.size == 0:
        raise ValueError(f"V must be a vector of even length, got shape {V.shape}")
    n = V.size // 2
    return 1j * c.mu * (np.outer(V, V.conj()) - np.eye(2 * n)) \
        + 1j * (c.mu - c.nu) * build_C(n)


def build_Q(x) -> np.ndarray:
    """Traceless real diagonal diag(x_1,...,x_n,-x_1,...,-x_n)."""
    x = np.asarray(x, dtype=float)
    return np.diag(np.concatenate([x, -x])).astype(complex)


def build_Lambda(lam) -> np.ndarray:
    """Same balanced diagonal as build_Q, for action-type variables."""
    return build_Q(lam)


def z_vector(lam, c: Couplings) -> np.ndarray:
    """All n spectral factors z_a(lambda), a = 0..n-1.

    z_a = -(1 + i nu/lam_a) prod_{b != a} (1 + 2i mu/(lam_a - lam_b))
                                          (1 + 2i mu/(lam_a + lam_b))

    Nonzero on the open chamber.
    """
    lam = np.asarray(lam, dtype=float)
    require_chamber(lam, what="lambda")
    n = lam.size
    diff = lam[:, None] - lam[None, :]
    summ = lam[:, None] + lam[None, :]
    np.fill_diagonal(diff, 1.0)  # placeholder, excluded below
    fac = (1 + 2j * c.mu / diff) * (1 + 2j * c.mu / summ)
    np.fill_diagonal(fac, 1.0)
    return -(1 + 1j * c.nu / lam) * fac.prod(axis=1)


def z_factor(a: int, lam, c: Couplings) -> complex:
    """Single spectral factor z_a(lambda) (0-based index a)."""
    n = np.asarray(lam).size
    if not 0 <= a < n:
        raise IndexError(f"index a={a} outside 0..{n - 1}")
    return complex(z_vector(lam, c)[a])


def alpha_beta(x: float, kappa: float) -> tuple[float, complex]:
    """Dressing pair (alpha(x), beta(x)) for x > 0.

    alpha = sqrt(x + sqrt(x^2 + kappa^2)) / sqrt(2x)  (real, >= 1/sqrt(2)),
    beta  = i kappa / (sqrt(2x) sqrt(x + sqrt(x^2 + kappa^2)))  (pure imaginary).

    They satisfy alpha^2 + beta^2 = 1, alpha^2 - beta^2 = sqrt(1 + kappa^2/x^2)
    and 2 alpha beta = i kappa / x; principal roots throughout.
    """
    if not x > 0:
        raise DomainError(f"alpha/beta need x > 0, got x={x}")
    s = np.sqrt(x + np.hypot(x, kappa))
    r = np.sqrt(2.0 * x)
    return float(s / r), complex(1j * kappa / (r * s))


def build_h(lam, c: Couplings) -> np.ndarray:
    """Hermitian dressing matrix built from the 2x2 blocks [[alpha, beta], [-beta, alpha]].

    h is Hermitian, lies in the group h* C h = C, and its inverse square has
    the closed form sqrt(1_N + kappa^2 Lambda^-2) + i kappa C Lambda^-1.
    """
    lam = np.asarray(lam, dtype=float)
    require_chamber(lam, what="lambda")
    n = lam.size
    al = np.empty(n)
    be = np.empty(n, dtype=complex)
    for a in range(n):
        al[a], be[a] = alpha_beta(lam[a], c.kappa)
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, :n] = np.diag(al)
    h[n:, n:] = np.diag(al)
    h[:n, n:] = np.diag(be)
    h[n:, :n] = -np.diag(be)
    return h


def h_inv_sq_closed_form(lam, c: Couplings) -> np.ndarray:
    """Closed form of h(lambda)^-2: sqrt(1_N + kappa^2 Lambda^-2) + i kappa C Lambda^-1."""
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    d = np.concatenate([lam, -lam])
    return np.diag(np.sqrt(1 + c.kappa ** 2 / d ** 2)).astype(complex) \
        + 1j * c.kappa * build_C(n) @ np.diag(1.0 / d)


def delta_phase(lam, c: Couplings) -> np.ndarray:
    """Per-particle scattering phase shifts Delta_a(lambda).

    Delta_a = -1/2 sum_{b<a} ln(1 + 4 mu^2/(lam_a - lam_b)^2)
              +1/2 sum_{b>a} ln(1 + 4 mu^2/(lam_a - lam_b)^2)
              +1/2 sum_{b!=a} ln(1 + 4 mu^2/(lam_a + lam_b)^2)
              +1/2 ln(1 + nu^2/lam_a^2) + 1/2 ln(1 + kappa^2/lam_a^2)
    """
    one, pair_diff, pair_sum = delta_decomposition(lam, c)
    n = np.asarray(lam).size
    out = one.copy()
    for a in range(n):
        for b in range(n):
            if b == a:
                continue
            out[a] += (0.5 if b > a else -0.5) * pair_diff[a, b] + 0.5 * pair_sum[a, b]
    return out


def delta_decomposition(lam, c: Couplings):
    """One- and two-body log terms entering Delta_a (factorized scattering data).

    Returns (one_body, pair_diff, pair_sum):
      one_body[a]     = 1/2 ln(1 + nu^2/lam_a^2) + 1/2 ln(1 + kappa^2/lam_a^2)
      pair_diff[a, b] = ln(1 + 4 mu^2/(lam_a - lam_b)^2)   (a != b)
      pair_sum[a, b]  = ln(1 + 4 mu^2/(lam_a + lam_b)^2)   (a != b)
    """
    lam = np.asarray(lam, dtype=float)
    require_chamber(lam, what="lambda")
    n = lam.size
    one = 0.5 * np.log1p(c.nu ** 2 / lam ** 2) + 0.5 * np.log1p(c.kappa ** 2 / lam ** 2)
    pair_diff = np.zeros((n, n))
    pair_sum = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            if b == a:
                continue
            pair_diff[a, b] = np.log1p(4 * c.mu ** 2 / (lam[a] - lam[b]) ** 2)
            pair_sum[a, b] = np.log1p(4 * c.mu ** 2 / (lam[a] + lam[b]) ** 2)
    return one, pair_diff, pair_sum
