"""Consensus conditions, gain thresholds and admissible-delay bounds.

Fixed topology: ``H = L + B`` must be positive stable. With ``Pbar`` solving
``Pbar H + H^T Pbar = I`` the analysis produces the gain threshold, the
Lyapunov-Razumikhin matrix ``Q`` and the delay bound

    tau = lambda_min(Q) / (||P EC P^-1 (EC)^T P|| + q ||P||),
    P = [[k Pbar, Pbar], [Pbar, Pbar]],  EC = [[0, 0], [0, -H]].

Switched topology: the bound uses ``lambda~ = min eig(H_s + H_s^T)`` and
``mu~ = max eig(H_s H_s^T)`` over the family.

Two readings of the gain threshold are reported: the formula
``mu / (2 lambda) + 1`` and an alternate (``mu / lambda + 1`` for a fixed
topology, ``mu / (2 lambda)`` for a switched family). The larger one gates ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import matops
from .digraph import (
    GraphError,
    LeaderTopology,
    check_common_order,
    is_balanced,
    laplacian,
    leader_globally_reachable,
)

__all__ = [
    "AnalysisError",
    "NotReachableError",
    "GainTooSmallError",
    "NotPositiveDefiniteError",
    "NotBalancedError",
    "SystemMatrices",
    "FixedAnalysis",
    "SwitchedAnalysis",
    "h_matrix",
    "is_positive_stable",
    "balanced_definiteness",
    "system_matrices",
    "razumikhin_matrix",
    "fixed_q_matrix",
    "fixed_constants",
    "analyze_fixed",
    "switched_q_matrix",
    "switched_tau",
    "switched_constants",
    "analyze_switched",
    "NORM_CONVENTION",
]

NORM_CONVENTION = "spectral (induced 2-norm)"
POS_STABLE_TOL = 1e-10
PIVOT_RATIO_WARN = 1e-10


class AnalysisError(ValueError):
    pass


class NotReachableError(AnalysisError):
    pass


class GainTooSmallError(AnalysisError):
    pass


class NotPositiveDefiniteError(AnalysisError):
    pass


class NotBalancedError(AnalysisError):
    pass


def h_matrix(t: LeaderTopology) -> np.ndarray:
    return laplacian(t.graph) + np.diag(t.leader_weights)


def is_positive_stable(h) -> bool:
    return bool(np.all(matops.eigenvalues(h).real > POS_STABLE_TOL))


def balanced_definiteness(t: LeaderTopology) -> bool:
    """Whether ``H + H^T`` is positive definite; only defined for balanced graphs."""
    if not is_balanced(t.graph):
        raise NotBalancedError("graph is not balanced")
    h = h_matrix(t)
    return matops.is_positive_definite(h + h.T)


@dataclass(frozen=True)
class SystemMatrices:
    c: np.ndarray
    e: np.ndarray
    f: np.ndarray


def system_matrices(h, k: float) -> SystemMatrices:
    """Error-system blocks: ``d eps/dt = C eps(t) + E eps(t - r)``, ``F = C + E``."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    z = np.zeros((n, n))
    eye = np.eye(n)
    c = np.block([[z, eye], [z, -k * eye]])
    e = np.block([[z, z], [-h, z]])
    if np.any(e @ e != 0.0):
        raise AssertionError("E must be nilpotent of order two")
    return SystemMatrices(c, e, c + e)


def razumikhin_matrix(p_bar, k: float) -> np.ndarray:
    return np.block([[k * p_bar, p_bar], [p_bar, p_bar]])


def fixed_q_matrix(h, p_bar, k: float) -> np.ndarray:
    n = h.shape[0]
    hp = h.T @ p_bar
    q_mat = np.block([[np.eye(n), hp], [hp.T, 2.0 * (k - 1.0) * p_bar]])
    return (q_mat + q_mat.T) / 2


def _gain_readings(mu: float, lam: float, fixed: bool):
    formula = mu / (2.0 * lam) + 1.0
    alternate = mu / lam + 1.0 if fixed else mu / (2.0 * lam)
    return formula, alternate


@dataclass(frozen=True)
class FixedAnalysis:
    h: np.ndarray
    p_bar: np.ndarray
    mu_bar: float
    lambda_bar: float
    k_star: float
    k_star_formula: float
    k_star_alternate: float
    k: float
    q: float
    q_matrix: np.ndarray
    lambda_min: float
    tau: float
    lyapunov_residual: float
    norm: str = NORM_CONVENTION
    warnings: tuple[str, ...] = field(default=())


def fixed_constants(h, k: float, q: float) -> FixedAnalysis:
    """All fixed-topology constants at gain ``k`` with no admissibility gating.

    ``tau`` is ``nan`` when ``Q`` is not positive definite.
    """
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    p_bar = matops.solve_lyapunov(h)
    mu_bar = float(matops.symmetric_eigenvalues(_sym(p_bar @ h @ h.T @ p_bar))[-1])
    lambda_bar = float(matops.symmetric_eigenvalues(p_bar)[0])
    formula, alternate = _gain_readings(mu_bar, lambda_bar, fixed=True)
    q_mat = fixed_q_matrix(h, p_bar, k)
    lambda_min = float(matops.symmetric_eigenvalues(q_mat)[0])
    warnings = []

    tau = float("nan")
    if matops.is_positive_definite(q_mat):
        p = razumikhin_matrix(p_bar, k)
        z = np.zeros((n, n))
        ec = np.block([[z, z], [z, -h]])
        p_inv, ratio = matops.inverse(p, return_pivot_ratio=True)
        if ratio < PIVOT_RATIO_WARN:
            warnings.append(f"P is ill-conditioned (pivot ratio {ratio:.2e})")
        growth = p @ ec @ p_inv @ ec.T @ p
        tau = lambda_min / (matops.spectral_norm(growth) + q * matops.spectral_norm(p))
    else:
        warnings.append(f"Q is not positive definite at k={k}")
    return FixedAnalysis(
        h=h,
        p_bar=p_bar,
        mu_bar=mu_bar,
        lambda_bar=lambda_bar,
        k_star=max(formula, alternate),
        k_star_formula=formula,
        k_star_alternate=alternate,
        k=float(k),
        q=float(q),
        q_matrix=q_mat,
        lambda_min=lambda_min,
        tau=float(tau),
        lyapunov_residual=matops.lyapunov_residual(p_bar, h),
        warnings=tuple(warnings),
    )


def _check_kq(k: float, q: float) -> None:
    if not k > 1.0:
        raise GainTooSmallError(f"gain k must exceed 1, got {k}")
    if not q > 1.0:
        raise AnalysisError(f"Razumikhin constant q must exceed 1, got {q}")


def analyze_fixed(t: LeaderTopology, k: float, q: float) -> FixedAnalysis:
    if not leader_globally_reachable(t):
        raise NotReachableError("leader not globally reachable")
    _check_kq(k, q)
    res = fixed_constants(h_matrix(t), k, q)
    if not k > res.k_star:
        raise GainTooSmallError(
            f"gain k={k} does not exceed k*={res.k_star:.6g} "
            f"(formula reading {res.k_star_formula:.6g}, alternate reading {res.k_star_alternate:.6g})"
        )
    if not matops.is_positive_definite(res.q_matrix):
        raise NotPositiveDefiniteError(f"Q is not positive definite at k={k}")
    return res


@dataclass(frozen=True)
class SwitchedAnalysis:
    h_list: tuple[np.ndarray, ...]
    lambda_tilde: float
    mu_tilde: float
    k_star: float
    k_star_formula: float
    k_star_alternate: float
    k: float
    q: float
    lambda_min: float
    tau: float
    balanced: tuple[bool, ...]
    norm: str = NORM_CONVENTION
    warnings: tuple[str, ...] = field(default=())


def switched_q_matrix(h, k: float) -> np.ndarray:
    n = h.shape[0]
    return np.block([[h.T + h, h.T], [h, 2.0 * (k - 1.0) * np.eye(n)]])


def switched_tau(lambda_min: float, mu_tilde: float, k: float, q: float) -> float:
    denom = 2.0 * k / (k - 1.0) * mu_tilde + 0.5 * q * (k + 1.0 + np.sqrt((k - 1.0) ** 2 + 4.0))
    return float(lambda_min / denom)


def _sym(a):
    return (a + a.T) / 2


def switched_constants(hs: Sequence[np.ndarray], k: float, q: float) -> SwitchedAnalysis:
    hs = tuple(np.asarray(h, dtype=float) for h in hs)
    lambda_tilde = min(float(matops.symmetric_eigenvalues(h + h.T)[0]) for h in hs)
    mu_tilde = max(float(matops.symmetric_eigenvalues(_sym(h @ h.T))[-1]) for h in hs)
    if lambda_tilde > 0:
        formula, alternate = _gain_readings(mu_tilde, lambda_tilde, fixed=False)
    else:
        formula = alternate = float("inf")
    lambda_min = min(float(matops.symmetric_eigenvalues(switched_q_matrix(h, k))[0]) for h in hs)
    warnings = []
    if lambda_min > 0 and k > 1:
        tau = switched_tau(lambda_min, mu_tilde, k, q)
    else:
        tau = float("nan")
        warnings.append(f"some Q_sigma is not positive definite at k={k}")
    return SwitchedAnalysis(
        h_list=hs,
        lambda_tilde=lambda_tilde,
        mu_tilde=mu_tilde,
        k_star=max(formula, alternate),
        k_star_formula=formula,
        k_star_alternate=alternate,
        k=float(k),
        q=float(q),
        lambda_min=lambda_min,
        tau=tau,
        balanced=(),
        warnings=tuple(warnings),
    )


def analyze_switched(ts: Sequence[LeaderTopology], k: float, q: float) -> SwitchedAnalysis:
    """Switched-family analysis.

    Unbalanced members are allowed and flagged in ``warnings``; the bound is
    only proven for balanced families.
    """
    try:
        check_common_order(ts)
    except GraphError as exc:
        raise AnalysisError(str(exc)) from exc
    for idx, t in enumerate(ts):
        if not leader_globally_reachable(t):
            raise NotReachableError(f"leader not globally reachable in topology {idx}")
    _check_kq(k, q)
    res = switched_constants([h_matrix(t) for t in ts], k, q)
    if not res.lambda_tilde > 0:
        raise NotPositiveDefiniteError(
            f"lambda~ = {res.lambda_tilde:.6g} <= 0: some H + H^T is not positive definite"
        )
    if not k > res.k_star:
        raise GainTooSmallError(
            f"gain k={k} does not exceed k*={res.k_star:.6g} "
            f"(formula reading {res.k_star_formula:.6g}, alternate reading {res.k_star_alternate:.6g})"
        )
    if not res.lambda_min > 0:
        raise NotPositiveDefiniteError(f"some Q_sigma is not positive definite at k={k}")
    balanced = tuple(is_balanced(t.graph) for t in ts)
    warnings = list(res.warnings)
    warnings += [f"topology {i} is not balanced" for i, b in enumerate(balanced) if not b]
    return SwitchedAnalysis(**{**res.__dict__, "balanced": balanced, "warnings": tuple(warnings)})
