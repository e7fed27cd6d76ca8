"""Cellular link-quality protection.

When cross-tier interference keeps the cellular user below its target, the
macro BS broadcasts a failure flag after every equilibrium epoch. Femtocells
whose interference contribution at the macro BS exceeds a threshold y (the
dominant set) cut their working SINR targets by t_db; the threshold then
drops by delta_y_db so the dominant set widens each failing epoch. The loop
stops once the cellular SINR reaches (1 - epsilon) of its target.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from twotier.channel import GainMatrix
from twotier.feasibility import spectral_radius
from twotier.game import (GameParams, GameState, cellular_target_of,
                          femto_equilibrium_sinr, femto_targets_of,
                          run_to_equilibrium)


@dataclass
class ProtectionConfig:
    epsilon: float = 0.05         # cellular SINR tolerance in [0, 1]
    t_db: float = 0.8             # per-epoch working-target reduction
    delta_y_db: float = 3.0       # per-epoch threshold reduction
    y0: float = None              # initial threshold (W); derived when None
    m_iters: int = 1000           # game iterations per epoch
    max_epochs: int = 60
    db_tolerance: bool = True     # compare gamma_0 to (1-eps)*target on the dB scale

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.t_db <= 0 or self.delta_y_db <= 0:
            raise ValueError("t_db and delta_y_db must be positive (factors > 1)")
        if self.max_epochs < 1 or self.m_iters < 1:
            raise ValueError("max_epochs and m_iters must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    y: float                      # threshold in force when the set was formed (W)
    pi: frozenset                 # dominant femtocell indices (1-based)
    gamma0_db: float
    mean_working_target_db: float
    iterations: int


@dataclass
class ProtectionOutcome:
    state: GameState
    protected: bool
    epochs: int
    working_targets: np.ndarray       # final per-femtocell targets (linear)
    trace: list = field(default_factory=list)
    final_rho: float = np.nan         # rho of the achieved-SINR coupling matrix
    mean_femto_sinr_db: float = np.nan
    frac_degraded: float = np.nan
    mean_pct_reduction: float = np.nan


def meets_cellular_tolerance(gamma0: float, gamma0_target: float,
                             epsilon: float, db_mode: bool = True) -> bool:
    """Whether the cellular user is within tolerance of its target."""
    if db_mode:
        if gamma0 <= 0:
            return False
        return 10 * np.log10(gamma0) >= (1.0 - epsilon) * 10 * np.log10(gamma0_target)
    return gamma0 >= (1.0 - epsilon) * gamma0_target


def dominant_set(p: np.ndarray, gm: GainMatrix, y: float) -> frozenset:
    """Femtocells whose received interference power at the macro BS exceeds y.

    Indices are 1-based to match user numbering; p is the full power vector.
    """
    received = np.asarray(p, dtype=float)[1:] * gm.raw[0, 1:]
    return frozenset(int(i) + 1 for i in np.nonzero(received > y)[0])


def sufficient_reduction_check(p: np.ndarray, gm: GainMatrix, pi, t: float,
                               gamma0: float, gamma0_target: float,
                               epsilon: float, p_max: float) -> bool:
    """Certificate that scaling the set's targets down by t restores the link.

    Checks (1 - 1/t) * sum_{i in pi} p_i g_0i against
    p_max g_00 (1/gamma0 - 1/((1-eps) target)).
    """
    if t <= 1.0:
        return False
    idx = np.asarray(sorted(pi), dtype=int)
    lhs = (1.0 - 1.0 / t) * float(np.sum(p[idx] * gm.raw[0, idx]))
    rhs = p_max * gm.raw[0, 0] * (1.0 / gamma0 - 1.0 / ((1.0 - epsilon) * gamma0_target))
    return lhs >= rhs


def compute_metrics(femto_sinr: np.ndarray, femto_min_targets: np.ndarray):
    """Outcome triple: mean dB SINR, degraded fraction, mean pct dB reduction.

    The reduction of a degraded femtocell is its dB shortfall relative to
    its dB target; femtocells meeting their target contribute zero.
    """
    femto_sinr = np.asarray(femto_sinr, dtype=float)
    targets = np.asarray(femto_min_targets, dtype=float)
    n = len(targets)
    with np.errstate(divide="ignore"):
        sinr_db = 10 * np.log10(femto_sinr)
        target_db = 10 * np.log10(targets)
    mean_db = float(np.mean(sinr_db))
    degraded = femto_sinr < targets
    frac = float(np.mean(degraded))
    reduction = np.where(degraded, (target_db - sinr_db) / target_db, 0.0)
    return mean_db, frac, float(np.sum(reduction) / n)


def run_protection(gm: GainMatrix, targets, game_params: GameParams,
                   cfg: ProtectionConfig, sigma2: float) -> ProtectionOutcome:
    """Run equilibrium epochs, shrinking dominant interferers until protected.

    Per epoch: at most ``cfg.m_iters`` game iterations (stopping early once
    converged changes nothing at the fixed point); on failure every
    femtocell in the dominant set loses t_db from its working target and
    the threshold drops by delta_y_db. The first failing epoch seeds the
    threshold at max_i p_i g_0i / delta_y so the initial set is nonempty.
    Exhausting max_epochs flags the outcome unprotected.
    """
    gamma0_target = cellular_target_of(targets)
    working = femto_equilibrium_sinr(gm, targets, game_params)
    gamma_f_min = femto_targets_of(targets)

    epoch_params = GameParams(a=game_params.a, b=game_params.b,
                              p_max=game_params.p_max, max_iter=cfg.m_iters,
                              conv_tol=game_params.conv_tol)
    t_factor = 10.0 ** (-cfg.t_db / 10.0)
    delta_y = 10.0 ** (cfg.delta_y_db / 10.0)

    p = np.full(gm.raw.shape[0], game_params.p_max)
    y = cfg.y0
    trace = []
    protected = False
    state = None
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        state, _, iters = run_to_equilibrium(
            gm, targets, epoch_params, sigma2, p0=p, working_targets=working)
        p = state.p
        gamma0 = state.sinr[0]
        gamma0_db = 10 * np.log10(gamma0) if gamma0 > 0 else -np.inf
        if meets_cellular_tolerance(gamma0, gamma0_target, cfg.epsilon, cfg.db_tolerance):
            protected = True
            trace.append(EpochRecord(epoch, np.inf if y is None else y, frozenset(),
                                     gamma0_db, _mean_db(working), iters))
            break
        if y is None:
            y = float(np.max(p[1:] * gm.raw[0, 1:])) / delta_y
        pi = dominant_set(p, gm, y)
        trace.append(EpochRecord(epoch, y, pi, gamma0_db, _mean_db(working), iters))
        idx = np.asarray(sorted(pi), dtype=int) - 1
        working[idx] *= t_factor
        y /= delta_y

    sinr_f = state.sinr[1:]
    mean_db, frac, mean_red = compute_metrics(sinr_f, gamma_f_min)
    rho_eff, _ = spectral_radius(state.sinr[:, None] * gm.normalized)
    return ProtectionOutcome(
        state=state, protected=protected, epochs=epoch, working_targets=working,
        trace=trace, final_rho=rho_eff, mean_femto_sinr_db=mean_db,
        frac_degraded=frac, mean_pct_reduction=mean_red)


def _mean_db(values: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(np.mean(10 * np.log10(np.maximum(values, 0.0))))


def protection_trace_to_csv(outcome: ProtectionOutcome, path) -> None:
    """Epoch trace rows (epoch, y_dbm, pi_size, gamma0_db, mean_femto_target_db)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# schema: protect-trace.v1"])
        writer.writerow(["epoch", "y_dbm", "pi_size", "gamma0_db", "mean_femto_target_db"])
        for rec in outcome.trace:
            y_dbm = 10 * np.log10(rec.y * 1e3) if np.isfinite(rec.y) and rec.y > 0 else "inf"
            if isinstance(y_dbm, float):
                y_dbm = f"{y_dbm:.6f}"
            writer.writerow([rec.epoch, y_dbm, len(rec.pi),
                             f"{rec.gamma0_db:.6f}", f"{rec.mean_working_target_db:.6f}"])
