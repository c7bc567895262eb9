"""Lax matrices, Hamiltonians, level-set embeddings, and their certificates.

The Sutherland side carries the Lax matrix L(q, p); the RSvD side carries the
positive definite pair (A, A_BC = h^-1 A h^-1).  Both embed into the common
zero level set of the extended momentum map, and the functions here expose the
residuals and trace identities that certify those embeddings numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core
from .core import Couplings, PhasePointR, PhasePointS, require_chamber
from .matengine import (DEFAULT_PRECISION, NotPositiveDefiniteError,
                        PrecisionConfig, eig_hermitian, sqrt_posdef)


@dataclass(frozen=True)
class SutherlandLax:
    """Lax matrix L = [[A, B], [-B, -A]] - i kappa C with its n x n blocks.

    A is Hermitian with diag(A) = p, B is anti-Hermitian; consequently
    L + i kappa C is Hermitian and L* C + C L = 0.
    """

    L: np.ndarray
    A: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class RsvdLax:
    """RSvD Lax data: A (Hermitian positive definite, in the group
    A* C A = C), A_BC = h^-1 A h^-1, and the orbit vectors F, V with
    V = A^(-1/2) F satisfying V*V = N and CV + V = 0."""

    acal: np.ndarray
    abc: np.ndarray
    fvec: np.ndarray
    vvec: np.ndarray


# ---------------------------------------------------------------------------
# Sutherland side
# ---------------------------------------------------------------------------

def hamiltonian_S(pt: PhasePointS, c: Couplings) -> float:
    """Sutherland energy with w(x) = 1/sinh(x)^2:

    sum_a [p_a^2/2 + g1^2 w(q_a) + g2^2 w(2 q_a)]
      + g^2 sum_{a<b} [w(q_a - q_b) + w(q_a + q_b)]
    """
    q, p = pt.q, pt.p
    w = lambda x: 1.0 / np.sinh(x) ** 2
    H = float(np.sum(0.5 * p ** 2 + c.g1_sq * w(q) + c.g2_sq * w(2 * q)))
    for a in range(pt.n):
        for b in range(a + 1, pt.n):
            H += c.g_sq * (w(q[a] - q[b]) + w(q[a] + q[b]))
    return H


def build_lax_S(pt: PhasePointS, c: Couplings) -> SutherlandLax:
    q, p, n = pt.q, pt.p, pt.n
    A = np.diag(p).astype(complex)
    B = np.diag(1j * (c.nu + c.kappa * np.cosh(2 * q)) / np.sinh(2 * q))
    for a in range(n):
        for b in range(n):
            if b != a:
                A[a, b] = -1j * c.mu / np.sinh(q[a] - q[b])
                B[a, b] = 1j * c.mu / np.sinh(q[a] + q[b])
    L = np.zeros((2 * n, 2 * n), dtype=complex)
    L[:n, :n] = A
    L[:n, n:] = B
    L[n:, :n] = -B
    L[n:, n:] = -A
    L -= 1j * c.kappa * core.build_C(n)
    return SutherlandLax(L=L, A=A, B=B)


# ---------------------------------------------------------------------------
# RSvD side
# ---------------------------------------------------------------------------

def v_weights(lam, c: Couplings) -> np.ndarray:
    """Interaction weights v_a(lambda) multiplying cosh(2 theta_a) in the energy.

    Evaluated through log1p/expm1 so that v_a - 1 keeps full relative accuracy
    deep in the asymptotic regime where v_a -> 1.
    """
    lam = np.asarray(lam, dtype=float)
    require_chamber(lam, what="lambda")
    n = lam.size
    lnv = 0.5 * (np.log1p(c.nu ** 2 / lam ** 2) + np.log1p(c.kappa ** 2 / lam ** 2))
    for a in range(n):
        for b in range(n):
            if b != a:
                lnv[a] += 0.5 * (np.log1p(4 * c.mu ** 2 / (lam[a] - lam[b]) ** 2)
                                 + np.log1p(4 * c.mu ** 2 / (lam[a] + lam[b]) ** 2))
    return 1.0 + np.expm1(lnv)


def hamiltonian_R(pt: PhasePointR, c: Couplings) -> float:
    """RSvD energy: sum_a cosh(2 theta_a) v_a(lambda) plus the kappa-nu tail

    (nu kappa / 4 mu^2) [prod_a (1 + 4 mu^2/lam_a^2) - 1].
    """
    lam, th = pt.lam, pt.theta
    H = float(np.sum(np.cosh(2 * th) * v_weights(lam, c)))
    tail = np.expm1(np.sum(np.log1p(4 * c.mu ** 2 / lam ** 2)))
    return H + c.nu * c.kappa / (4 * c.mu ** 2) * tail


def rsvd_kernel(lam, c: Couplings) -> np.ndarray:
    """The RSvD Lax matrix at theta = 0.

    The theta dependence factorizes as A(lam, theta) = D K(lam) D with
    D = diag(e^-theta, e^theta), which is what makes trajectory evaluation at
    large |theta| numerically tractable.
    """
    lam = np.asarray(lam, dtype=float)
    require_chamber(lam, what="lambda")
    n = lam.size
    z = core.z_vector(lam, c)
    az = np.abs(z)
    K = np.zeros((2 * n, 2 * n), dtype=complex)
    tiu = 2j * c.mu
    for a in range(n):
        for b in range(n):
            K[a, b] = np.sqrt(az[a] * az[b]) * tiu / (tiu + lam[a] - lam[b])
            K[n + a, n + b] = (z[a].conjugate() * z[b] / np.sqrt(az[a] * az[b])) \
                * tiu / (tiu - lam[a] + lam[b])
            K[a, n + b] = z[b] * np.sqrt(az[a] / az[b]) * tiu / (tiu + lam[a] + lam[b])
            if a == b:
                K[a, n + b] += 1j * (c.mu - c.nu) / (1j * c.mu + lam[a])
    K[n:, :n] = K[:n, n:].conj().T
    return K


def theta_scaling(theta) -> np.ndarray:
    """diag(e^-theta_1..n, e^theta_1..n) as a vector of diagonal entries."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(np.concatenate([-theta, theta]))


def build_lax_R(pt: PhasePointR, c: Couplings,
                prec: PrecisionConfig = DEFAULT_PRECISION) -> RsvdLax:
    lam, th, n = pt.lam, pt.theta, pt.n
    d = theta_scaling(th)
    acal = d[:, None] * rsvd_kernel(lam, c) * d[None, :]
    eres = eig_hermitian(acal, prec)
    if eres.values[-1] <= 0:
        raise NotPositiveDefiniteError(float(eres.values[-1]))
    h = core.build_h(lam, c)
    hinv = np.linalg.inv(h)
    abc = hinv @ acal @ hinv
    abc = 0.5 * (abc + abc.conj().T)
    z = core.z_vector(lam, c)
    az = np.abs(z)
    fvec = np.concatenate([np.exp(-th) * np.sqrt(az),
                           np.exp(th) * z.conjugate() / np.sqrt(az)])
    inv_sqrt = (eres.vectors / np.sqrt(eres.values)[None, :]) @ eres.vectors.conj().T
    vvec = inv_sqrt @ fvec
    return RsvdLax(acal=acal, abc=abc, fvec=fvec, vvec=vvec)


# ---------------------------------------------------------------------------
# level-set embeddings and momentum residuals
# ---------------------------------------------------------------------------

def embed_S(pt: PhasePointS, c: Couplings):
    """Embedding (y, Y, rho) = (e^Q, L(q, p), xi(E)) of a Sutherland point
    into the zero level set (gauge pair fixed to the identity)."""
    y = np.diag(np.exp(np.concatenate([pt.q, -pt.q]))).astype(complex)
    Y = build_lax_S(pt, c).L
    rho = core.build_xi(core.build_E(pt.n), c)
    return y, Y, rho


def embed_R(pt: PhasePointR, c: Couplings,
            prec: PrecisionConfig = DEFAULT_PRECISION):
    """Embedding (y, Y, rho) = (A^(1/2) h^-1, h Lambda h^-1, xi(V)) of an
    RSvD point into the zero level set."""
    lax = build_lax_R(pt, c, prec)
    h = core.build_h(pt.lam, c)
    hinv = np.linalg.inv(h)
    y = sqrt_posdef(lax.acal, prec) @ hinv
    Y = h @ core.build_Lambda(pt.lam) @ hinv
    rho = core.build_xi(lax.vvec, c)
    return y, Y, rho


def _anti_hermitian_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M - M.conj().T)


def _momentum_residual(y, Y, rho, c: Couplings) -> float:
    n = Y.shape[0] // 2
    C = core.build_C(n)
    r1 = np.linalg.norm(_anti_hermitian_part(y @ Y @ np.linalg.inv(y)) + rho, 2)
    r2 = np.linalg.norm(_anti_hermitian_part(Y) + 1j * c.kappa * C, 2)
    return float(max(r1, r2))


def momentum_residual_S(pt: PhasePointS, c: Couplings) -> float:
    """Deviation of the Sutherland embedding from the zero level of the
    momentum map: max(||(y Y y^-1)_k + rho||, ||Y_k + i kappa C||)."""
    return _momentum_residual(*embed_S(pt, c), c)


def momentum_residual_R(pt: PhasePointR, c: Couplings,
                        prec: PrecisionConfig = DEFAULT_PRECISION) -> float:
    return _momentum_residual(*embed_R(pt, c, prec), c)


# ---------------------------------------------------------------------------
# minor identities
# ---------------------------------------------------------------------------

def minor_flow_matrix(pt: PhasePointR, c: Couplings) -> np.ndarray:
    """The reordered matrix M = W A sqrt(1_N + kappa^2 Lambda^-2) W^-1 whose
    leading principal minors control the asymptotics of the dual flow.

    W is block-diag(1_n, R_n) with R_n the reversal permutation.
    """
    n = pt.n
    lax_d = theta_scaling(pt.theta)
    A = lax_d[:, None] * rsvd_kernel(pt.lam, c) * lax_d[None, :]
    d = np.concatenate([pt.lam, -pt.lam])
    S = np.diag(np.sqrt(1 + c.kappa ** 2 / d ** 2)).astype(complex)
    W = np.zeros((2 * n, 2 * n))
    W[:n, :n] = np.eye(n)
    W[n:, n:] = np.eye(n)[::-1]
    return W @ A @ S @ W.T  # W is its own inverse


def cauchy_minor_check(pt: PhasePointR, c: Couplings, delta_fn=None) -> np.ndarray:
    """Residuals of the minor identity ln m_a + 2 theta_a - Delta_a(lambda).

    m_a are quotients of consecutive leading principal minors of the flow
    matrix; the identity pins the angle variables to the scattering phases and
    must vanish componentwise on the chamber.  delta_fn overrides the phase
    function (diagnostic hook used by the verification suite).
    """
    if delta_fn is None:
        delta_fn = core.delta_phase
    M = minor_flow_matrix(pt, c)
    n = pt.n
    logm = np.empty(n)
    prev = 0.0
    for a in range(1, n + 1):
        sign, logdet = np.linalg.slogdet(M[:a, :a])
        if logdet == -np.inf:
            raise np.linalg.LinAlgError(f"leading {a} x {a} minor is singular")
        logm[a - 1] = logdet - prev
        prev = logdet
    delta = np.asarray(delta_fn(pt.lam, c), dtype=float)
    return logm + 2 * pt.theta - delta


def cauchy_determinant_error(pt: PhasePointR, c: Couplings) -> np.ndarray:
    """Relative error of the closed Cauchy formula for det M^(a) against the
    directly computed leading principal minors, a = 1..n."""
    M = minor_flow_matrix(pt, c)
    n = pt.n
    lam, th = pt.lam, pt.theta
    az = np.abs(core.z_vector(lam, c))
    errs = np.empty(n)
    for a in range(1, n + 1):
        log_cf = float(np.sum(-2 * th[:a] + np.log(az[:a])
                              + 0.5 * np.log1p(c.kappa ** 2 / lam[:a] ** 2)))
        for i in range(a):
            for j in range(i + 1, a):
                log_cf -= np.log1p(4 * c.mu ** 2 / (lam[i] - lam[j]) ** 2)
        sign, logdet = np.linalg.slogdet(M[:a, :a])
        # minors are real positive on the chamber; compare in log scale
        errs[a - 1] = abs(np.expm1(logdet - log_cf)) + abs(np.imag(sign))
    return errs
