"""Utility-based distributed SINR adaptation.

The cellular user chases its target with the classic power update
p0 <- min(p0 * Gamma_0 / gamma_0, p_max). Each femtocell maximizes an
exponential SINR reward minus a linear cross-tier interference price,
which shifts its working SINR target to

    gamma_i* = [Gamma_i + (1/a_i) ln(a_i g_ii / (b_i g_0i))]^+

and iterates p_i <- min(p_i * gamma_i* / gamma_i, p_max). The joint update
is a standard interference function, so the fixed point (the Nash
equilibrium) is unique and reached from any initialization.
"""

import csv
from dataclasses import dataclass

import numpy as np

from twotier.channel import GainMatrix
from twotier.feasibility import achieved_sinr


@dataclass
class GameParams:
    """Reward steepness a, interference price b, and iteration controls."""

    a: float | np.ndarray = 1.0
    b: float | np.ndarray = 1.0
    p_max: float = 1.0
    max_iter: int = 5000
    conv_tol: float = 1e-9

    def coefficient_arrays(self, n_femto: int):
        a = np.broadcast_to(np.asarray(self.a, dtype=float), (n_femto,)).copy()
        b = np.broadcast_to(np.asarray(self.b, dtype=float), (n_femto,)).copy()
        if np.any(a <= 0) or np.any(b <= 0):
            raise ValueError("reward and penalty coefficients must be positive")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        return a, b


@dataclass
class GameState:
    p: np.ndarray       # transmit powers (W), index 0 = cellular user
    sinr: np.ndarray    # achieved SINRs (linear)
    iteration: int


def interference(i: int, p: np.ndarray, gm: GainMatrix, sigma2: float) -> float:
    """Interference-plus-noise power at BS i for powers p."""
    return float(interference_vector(p, gm, sigma2)[i])


def interference_vector(p: np.ndarray, gm: GainMatrix, sigma2: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    diag = np.diag(gm.raw)
    return gm.raw @ p - diag * p + sigma2


def femto_equilibrium_sinr(gm: GainMatrix, targets, params: GameParams) -> np.ndarray:
    """Per-femtocell working equilibrium SINR targets (before the power cap).

    ``targets`` is the vector of minimum femtocell targets (linear) or a
    SinrTargets instance. A femtocell invisible to the macro BS (zero
    cross gain) has no finite price and is rejected.
    """
    gamma_f = femto_targets_of(targets)
    n = gm.n_femto
    a, b = params.coefficient_arrays(n)
    g_own = np.diag(gm.raw)[1:]
    g_cross = gm.raw[0, 1:]
    if np.any(g_cross <= 0):
        bad = int(np.argmax(g_cross <= 0)) + 1
        raise ValueError(f"femtocell {bad} has zero gain to the macro BS")
    return np.maximum(gamma_f + np.log(a * g_own / (b * g_cross)) / a, 0.0)


def cellular_target_of(targets) -> float:
    """Gamma_0 from a SinrTargets instance or a raw (N+1,) target vector."""
    if hasattr(targets, "gamma_c"):
        return float(targets.gamma_c)
    return float(np.asarray(targets, dtype=float)[0])


def femto_targets_of(targets) -> np.ndarray:
    """Femtocell minimum targets from SinrTargets or a raw (N,) vector."""
    if hasattr(targets, "gamma_f"):
        return np.asarray(targets.gamma_f, dtype=float)
    return np.asarray(targets, dtype=float)


def update_target_vector(gm: GainMatrix, targets, params: GameParams,
                         working_targets: np.ndarray = None) -> np.ndarray:
    """Per-user SINR the iteration drives toward: Gamma_0 then working gamma_i*."""
    gamma_c = cellular_target_of(targets)
    if working_targets is None:
        working_targets = femto_equilibrium_sinr(gm, targets, params)
    return np.concatenate([[gamma_c], working_targets])


def power_update(p: np.ndarray, gm: GainMatrix, update_targets: np.ndarray,
                 params: GameParams, sigma2: float) -> np.ndarray:
    """One synchronous update of all N+1 powers.

    p_i/gamma_i is evaluated as I_i/g_ii, which is exact and stays defined
    at p_i = 0.
    """
    ivec = interference_vector(p, gm, sigma2)
    raw_update = update_targets * ivec / np.diag(gm.raw)
    return np.minimum(raw_update, params.p_max)


def run_to_equilibrium(gm: GainMatrix, targets, params: GameParams, sigma2: float,
                       p0: np.ndarray = None, working_targets: np.ndarray = None,
                       trace: list = None):
    """Iterate the joint update until the relative power change stalls.

    Returns (GameState, converged, iterations). The fixed point is unique,
    so the initialization ``p0`` (default: everyone at p_max) only affects
    the transient. ``working_targets`` overrides the femtocell equilibrium
    targets, which the protection loop scales down across epochs.
    Non-convergence is reported through the flag, not raised.
    """
    n1 = gm.raw.shape[0]
    tvec = update_target_vector(gm, targets, params, working_targets)
    p = np.full(n1, params.p_max) if p0 is None else np.asarray(p0, dtype=float).copy()
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        p_next = power_update(p, gm, tvec, params, sigma2)
        if trace is not None:
            trace.append(p_next.copy())
        change = np.max(np.abs(p_next - p) / np.maximum(p, np.finfo(float).tiny))
        p = p_next
        if change < params.conv_tol:
            converged = True
            break
    state = GameState(p=p, sinr=achieved_sinr(p, gm, sigma2), iteration=iterations)
    return state, converged, iterations


def utility_cellular(gamma_0: float, gamma_c_target: float) -> float:
    """Least-squares payoff, maximal (zero) exactly on target."""
    return -(gamma_0 - gamma_c_target) ** 2


def utility_femto(i: int, p: np.ndarray, gm: GainMatrix, targets,
                  params: GameParams, sigma2: float) -> float:
    """Exponential SINR reward minus the interference price for femtocell i >= 1."""
    if not 1 <= i <= gm.n_femto:
        raise ValueError(f"femtocell index must be in 1..{gm.n_femto}, got {i}")
    gamma_f = femto_targets_of(targets)
    a, b = params.coefficient_arrays(gm.n_femto)
    p = np.asarray(p, dtype=float)
    ivec = interference_vector(p, gm, sigma2)
    gamma_i = gm.raw[i, i] * p[i] / ivec[i]
    reward = 1.0 - np.exp(-a[i - 1] * (gamma_i - gamma_f[i - 1]))
    price = b[i - 1] * p[i] * gm.raw[0, i] / ivec[i]
    return float(reward - price)


def trace_to_csv(trace, gm: GainMatrix, sigma2: float, path) -> None:
    """Per-iteration convergence trace as (iter, user_id, p_w, sinr_db) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# schema: adapt-trace.v1"])
        writer.writerow(["iter", "user_id", "p_w", "sinr_db"])
        for k, p in enumerate(trace, start=1):
            sinr = achieved_sinr(p, gm, sigma2)
            for uid in range(len(p)):
                sinr_db = 10 * np.log10(sinr[uid]) if sinr[uid] > 0 else -np.inf
                writer.writerow([k, uid, f"{p[uid]:.12e}", f"{sinr_db:.6f}"])
