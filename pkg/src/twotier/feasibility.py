"""Spectral-radius feasibility tests and centralized Pareto power allocation.

A target assignment Gamma is feasible exactly when the spectral radius of
diag(Gamma) @ G drops below one; the componentwise-minimal power vector then
solves (I - Gamma G) p = eta with eta_i = sigma2 * Gamma_i / g_ii.
"""

from dataclasses import dataclass

import numpy as np

from twotier.channel import GainMatrix


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries the last iterate."""

    def __init__(self, rho_estimate: float, vector: np.ndarray, iterations: int):
        super().__init__(
            f"spectral radius estimate did not converge after {iterations} "
            f"iterations (last estimate {rho_estimate:.6g})"
        )
        self.rho_estimate = rho_estimate
        self.vector = vector
        self.iterations = iterations


class InfeasibleTargetsError(ValueError):
    """SINR targets admit no nonnegative power allocation."""

    def __init__(self, rho: float):
        super().__init__(f"targets infeasible: spectral radius {rho:.6g} >= 1")
        self.rho = rho


@dataclass
class SinrTargets:
    """Per-user minimum SINR targets in linear units."""

    gamma_c: float
    gamma_f: np.ndarray

    def __post_init__(self):
        self.gamma_f = np.atleast_1d(np.asarray(self.gamma_f, dtype=float))
        if self.gamma_c <= 0 or np.any(self.gamma_f <= 0):
            raise ValueError("SINR targets must be positive")

    @classmethod
    def from_db(cls, gamma_c_db: float, gamma_f_db) -> "SinrTargets":
        return cls(10.0 ** (gamma_c_db / 10.0),
                   10.0 ** (np.asarray(gamma_f_db, dtype=float) / 10.0))

    @property
    def n_femto(self) -> int:
        return self.gamma_f.shape[0]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.gamma_c], self.gamma_f])


def spectral_radius(m, tol: float = 1e-10, max_iter: int = 100_000):
    """Perron root and eigenvector of a nonnegative square matrix.

    Power iteration on the diagonally shifted matrix m + s*I; the shift
    breaks the cycling that plain iteration exhibits on periodic matrices
    (e.g. the 2 x 2 antidiagonal case) without moving the eigenvector.
    Starts from the all-ones vector so reducible matrices still converge
    to the Perron root.

    Returns (rho, v) with v nonnegative, unit 1-norm, and residual
    ||m v - rho v||_inf <= tol * ||m||_inf. Raises PowerIterationError
    when max_iter is exhausted.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(m < 0):
        raise ValueError("matrix must be nonnegative")
    n = m.shape[0]
    if n == 0:
        return 0.0, np.zeros(0)

    norm_inf = float(np.max(np.sum(m, axis=1)))
    if norm_inf == 0.0:
        return 0.0, np.full(n, 1.0 / n)

    shift = 0.1 * norm_inf
    shifted = m + shift * np.eye(n)
    v = np.full(n, 1.0 / n)
    rho = 0.0
    for _ in range(max_iter):
        w = shifted @ v
        lam = float(np.sum(w))  # 1-norm growth; w >= 0 throughout
        # w - lam*v equals m v - (lam - shift) v, one matvec per step
        residual = float(np.max(np.abs(w - lam * v)))
        rho = lam - shift
        # rho-relative stop keeps the root accurate even when the Perron
        # vector is badly scaled; the floor guards near-nilpotent cases
        if residual <= tol * max(abs(rho), 1e-6 * norm_inf):
            return rho, v
        v = w / lam
    raise PowerIterationError(rho, v, max_iter)


def gamma_gain(targets: SinrTargets, gm: GainMatrix) -> np.ndarray:
    """The coupling matrix diag(Gamma) @ G."""
    vec = targets.as_vector()
    if vec.shape[0] != gm.normalized.shape[0]:
        raise ValueError("target vector and gain matrix dimensions differ")
    return vec[:, None] * gm.normalized


def is_feasible(targets: SinrTargets, gm: GainMatrix,
                tol: float = 1e-10, max_iter: int = 100_000):
    """Whether the targets admit a power allocation; returns (feasible, rho)."""
    rho, _ = spectral_radius(gamma_gain(targets, gm), tol=tol, max_iter=max_iter)
    return rho < 1.0, rho


def noise_vector(targets: SinrTargets, gm: GainMatrix, sigma2: float) -> np.ndarray:
    """Normalized noise eta_i = sigma2 * Gamma_i / g_ii."""
    return sigma2 * targets.as_vector() / np.diag(gm.raw)


def solve_centralized(targets: SinrTargets, gm: GainMatrix, sigma2: float) -> np.ndarray:
    """Pareto-minimal powers meeting every target with equality.

    Raises InfeasibleTargetsError when the spectral radius is >= 1. The
    solve is checked a posteriori against a residual bound.
    """
    coupling = gamma_gain(targets, gm)
    rho, _ = spectral_radius(coupling)
    if rho >= 1.0:
        raise InfeasibleTargetsError(rho)
    eta = noise_vector(targets, gm, sigma2)
    n = coupling.shape[0]
    p = np.linalg.solve(np.eye(n) - coupling, eta)
    residual = np.max(np.abs((np.eye(n) - coupling) @ p - eta))
    if residual > 1e-9 * max(np.max(np.abs(eta)), np.finfo(float).tiny):
        raise RuntimeError(f"centralized solve residual too large: {residual:.3g}")
    return p


def achieved_sinr(p: np.ndarray, gm: GainMatrix, sigma2: float) -> np.ndarray:
    """SINR of every user for transmit powers p."""
    p = np.asarray(p, dtype=float)
    diag = np.diag(gm.raw)
    interference = gm.raw @ p - diag * p + sigma2
    return diag * p / interference


def max_min_sir(gm: GainMatrix, tol: float = 1e-10) -> float:
    """Largest common SIR target 1 / rho(G); infinite when G is nilpotent."""
    rho, _ = spectral_radius(gm.normalized, tol=tol)
    if rho == 0.0:
        return np.inf
    return 1.0 / rho
