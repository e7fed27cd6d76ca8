"""Per-tier Pareto SINR frontier.

Fixing the spectral radius of the coupling matrix at kappa < 1 trades the
cellular SINR target against the femtocell targets. The exact frontier
(via the Perron complement of the cellular entry) is

    gamma_c = kappa^2 / (q_c . [I - (Gamma_f / kappa) F]^-1 Gamma_f q_f)

with the necessary upper bound 1 / (q_c . Gamma_f q_f) independent of kappa.
"""

import csv
from dataclasses import dataclass

import numpy as np

from twotier.channel import GainMatrix
from twotier.feasibility import spectral_radius


@dataclass
class ParetoPoint:
    gamma_c: float      # linear cellular target on the frontier
    gamma_f: float      # common linear femtocell target
    kappa: float        # spectral radius held by the pair


def default_kappa(rho_ff: float) -> float:
    """Target spectral radius given rho(Gamma_f F), kept inside (rho_ff, 1)."""
    if rho_ff >= 1.0:
        raise ValueError(f"femtocell coupling already infeasible: rho {rho_ff:.6g} >= 1")
    return max(1.0 - 1e-4, rho_ff + (1.0 - 1e-4) * (1.0 - rho_ff))


def _femto_diag(gamma_f, n: int) -> np.ndarray:
    vec = np.asarray(gamma_f, dtype=float)
    if vec.ndim == 0:
        vec = np.full(n, float(vec))
    if vec.shape != (n,):
        raise ValueError("gamma_f must be scalar or match the femtocell count")
    return vec


def max_cellular_sinr(gamma_f, gm: GainMatrix, kappa: float) -> float:
    """Highest cellular SINR target holding the spectral radius at kappa.

    ``gamma_f`` is a common scalar target or a per-femtocell vector.
    Requires rho(Gamma_f F) < kappa < 1.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    n = gm.n_femto
    gf = _femto_diag(gamma_f, n)
    rho_ff, _ = spectral_radius(gf[:, None] * gm.F)
    if kappa <= rho_ff:
        raise ValueError(
            f"kappa {kappa:.6g} must exceed rho(Gamma_f F) = {rho_ff:.6g}")
    # direct solve in place of the Neumann series; same inverse, better
    # conditioning
    lhs = np.eye(n) - (gf[:, None] * gm.F) / kappa
    x = np.linalg.solve(lhs, gf * gm.q_f)
    denom = float(gm.q_c @ x)
    if denom <= 0.0:
        return np.inf
    return kappa ** 2 / denom


def cellular_upper_bound(gamma_f, gm: GainMatrix) -> float:
    """Necessary bound on any feasible cellular target: 1 / (q_c . Gamma_f q_f)."""
    gf = _femto_diag(gamma_f, gm.n_femto)
    denom = float(gm.q_c @ (gf * gm.q_f))
    if denom == 0.0:
        return np.inf
    return 1.0 / denom


def contour_grid(gm: GainMatrix, gamma_f_min: float = 10.0 ** 0.5,
                 n_points: int = 200) -> np.ndarray:
    """Log-spaced common femtocell targets up to just below 1 / rho(F)."""
    rho_f, _ = spectral_radius(gm.F)
    upper = 0.999 / rho_f if rho_f > 0 else 1e8
    if upper <= gamma_f_min:
        raise ValueError("femtocell coupling too strong for the requested grid")
    return np.logspace(np.log10(gamma_f_min), np.log10(upper), n_points)


def pareto_contour(gamma_f_values, gm: GainMatrix, kappa: float = None):
    """Frontier points for common femtocell targets.

    When ``kappa`` is omitted it is chosen per point from the default rule.
    Points whose coupling rho(Gamma_f F) reaches the admissible limit are
    skipped; returns (points, skipped) where skipped holds (gamma_f, reason).
    """
    points, skipped = [], []
    for gamma_f in np.atleast_1d(np.asarray(gamma_f_values, dtype=float)):
        rho_ff, _ = spectral_radius(float(gamma_f) * gm.F)
        if rho_ff >= 1.0:
            skipped.append((float(gamma_f), f"rho(Gamma_f F) = {rho_ff:.6g} >= 1"))
            continue
        k = default_kappa(rho_ff) if kappa is None else kappa
        if k <= rho_ff:
            skipped.append((float(gamma_f), f"kappa {k:.6g} <= rho(Gamma_f F) {rho_ff:.6g}"))
            continue
        gamma_c = max_cellular_sinr(float(gamma_f), gm, k)
        points.append(ParetoPoint(gamma_c=gamma_c, gamma_f=float(gamma_f), kappa=k))
    return points, skipped


def contour_to_csv(points, gm: GainMatrix, path) -> None:
    """Emit (gamma_f_dB, gamma_c_dB, kappa, bound_dB) rows for plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# schema: contour.v1"])
        writer.writerow(["gamma_f_db", "gamma_c_db", "kappa", "bound_db"])
        for pt in points:
            bound = cellular_upper_bound(pt.gamma_f, gm)
            writer.writerow([
                f"{10 * np.log10(pt.gamma_f):.6f}",
                f"{10 * np.log10(pt.gamma_c):.6f}",
                f"{pt.kappa:.10f}",
                f"{10 * np.log10(bound):.6f}" if np.isfinite(bound) else "inf",
            ])
