"""IMT-2000-style path-loss gains, gain-matrix assembly and link budgets.

Raw gain between transmitting user j and base station i falls into five
cases (d = distance clamped at 1 m, attenuations as linear factors):

* cellular user at the macro BS:      K_c * d^-alpha_c
* femto user at its own AP:           K_fi * R_f^-beta
* femto user j at the macro BS:       K_fo * W * d^-alpha_fo
* cellular user at femto AP i:        K_c * W * d^-alpha_c
* femto user j at foreign femto AP i: K_fo * W^2 * d^-alpha_fo

One partition wall separates indoor from outdoor propagation; femto-to-femto
paths cross two walls, hence W^2.
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from twotier.geometry import NetworkGeometry, distance_matrix


@dataclass
class PropagationParams:
    """Path-loss exponents and fixed losses (dB values are attenuations)."""

    alpha_c: float = 4.0       # outdoor cellular exponent
    alpha_fo: float = 4.0      # femto-to-outdoor exponent
    beta: float = 3.0          # indoor exponent
    k_fi_db: float = 37.0      # indoor fixed loss
    w_db: float = 5.0          # partition (wall) loss
    f_mhz: float = 2000.0      # carrier frequency
    k_c_db: Optional[float] = None   # derived from f_mhz when omitted
    k_fo_db: Optional[float] = None  # defaults to k_c_db

    def __post_init__(self):
        if min(self.alpha_c, self.alpha_fo, self.beta) <= 0:
            raise ValueError("path loss exponents must be positive")
        if self.k_c_db is None:
            self.k_c_db = 30.0 * np.log10(self.f_mhz) - 71.0
        if self.k_fo_db is None:
            self.k_fo_db = self.k_c_db

    # linear attenuation factors
    @property
    def k_c(self) -> float:
        return 10.0 ** (-self.k_c_db / 10.0)

    @property
    def k_fi(self) -> float:
        return 10.0 ** (-self.k_fi_db / 10.0)

    @property
    def k_fo(self) -> float:
        return 10.0 ** (-self.k_fo_db / 10.0)

    @property
    def w(self) -> float:
        return 10.0 ** (-self.w_db / 10.0)


@dataclass
class GainMatrix:
    """Raw gains g[i, j] plus the normalized matrix G with zero diagonal."""

    raw: np.ndarray
    normalized: np.ndarray

    @classmethod
    def from_raw(cls, raw: np.ndarray) -> "GainMatrix":
        raw = np.asarray(raw, dtype=float)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise ValueError("raw gain matrix must be square")
        if not np.all(np.isfinite(raw)) or np.any(raw < 0):
            raise ValueError("raw gains must be finite and nonnegative")
        diag = np.diag(raw)
        if np.any(diag <= 0):
            raise ValueError("zero own-link gain, degenerate geometry")
        normalized = raw / diag[:, None]
        np.fill_diagonal(normalized, 0.0)
        return cls(raw=raw, normalized=normalized)

    @property
    def n_femto(self) -> int:
        return self.raw.shape[0] - 1

    @property
    def F(self) -> np.ndarray:
        """Normalized femto-to-femto block (N x N)."""
        return self.normalized[1:, 1:]

    @property
    def q_c(self) -> np.ndarray:
        """Normalized femto-user-to-macro-BS gains (row 0, length N)."""
        return self.normalized[0, 1:]

    @property
    def q_f(self) -> np.ndarray:
        """Normalized cellular-user-to-femto-BS gains (column 0, length N)."""
        return self.normalized[1:, 0]


def gain(i: int, j: int, geom: NetworkGeometry, params: PropagationParams,
         tx_at_ap: bool = False) -> float:
    """Single raw gain between user j and BS i."""
    d = distance_matrix(geom, tx_at_ap=tx_at_ap)[i, j]
    if i == 0 and j == 0:
        return params.k_c * d ** -params.alpha_c
    if i == j:
        return params.k_fi * d ** -params.beta
    if i == 0:
        return params.k_fo * params.w * d ** -params.alpha_fo
    if j == 0:
        return params.k_c * params.w * d ** -params.alpha_c
    return params.k_fo * params.w ** 2 * d ** -params.alpha_fo


def build_gain_matrix(geom: NetworkGeometry, params: PropagationParams,
                      tx_at_ap: bool = False) -> GainMatrix:
    """Assemble the (N+1) x (N+1) raw and normalized gain matrices.

    ``tx_at_ap`` evaluates femtocell cross-links from the AP position
    (own links keep the femto_radius separation); this is the convention
    that reproduces the reference 16-femtocell example exactly.
    """
    d = distance_matrix(geom, tx_at_ap=tx_at_ap)
    raw = params.k_fo * params.w ** 2 * d ** -params.alpha_fo
    raw[0, :] = params.k_fo * params.w * d[0, :] ** -params.alpha_fo
    raw[:, 0] = params.k_c * params.w * d[:, 0] ** -params.alpha_c
    raw[0, 0] = params.k_c * d[0, 0] ** -params.alpha_c
    idx = np.arange(1, geom.n_femto + 1)
    raw[idx, idx] = params.k_fi * d[idx, idx] ** -params.beta
    return GainMatrix.from_raw(raw)


def symmetric_gain_matrix(n_femto: int, d: float, d_f: float, d_c: float,
                          r_f: float, alpha: float) -> GainMatrix:
    """Pure-distance gain matrix g = D^-alpha for the symmetric N-femtocell setup.

    Every femto user sits at distance ``d_f`` from the macro BS and ``r_f``
    from its own AP; the cellular user sits at ``d`` from the macro BS and
    ``d_c`` from every femto AP. Femto-to-femto coupling is zero, isolating
    the cross-tier structure.
    """
    if n_femto < 1:
        raise ValueError("n_femto must be >= 1")
    n1 = n_femto + 1
    raw = np.zeros((n1, n1))
    raw[0, 0] = max(d, 1.0) ** -alpha
    raw[0, 1:] = max(d_f, 1.0) ** -alpha
    raw[1:, 0] = max(d_c, 1.0) ** -alpha
    idx = np.arange(1, n1)
    # femto-femto coupling left at zero; the cross-tier links alone keep
    # the normalized matrix irreducible
    raw[idx, idx] = max(r_f, 1.0) ** -alpha
    return GainMatrix.from_raw(raw)


def link_budget(gm: GainMatrix) -> float:
    """Link budget L = 1 / (q_c . q_f); infinite when the tiers decouple."""
    denom = float(gm.q_c @ gm.q_f)
    if denom == 0.0:
        return np.inf
    return 1.0 / denom


def link_budget_db(gm: GainMatrix) -> float:
    """Link budget in dB, -10 log10(q_c . q_f)."""
    denom = float(gm.q_c @ gm.q_f)
    if denom == 0.0:
        return np.inf
    return -10.0 * np.log10(denom)


def link_budget_symmetric(n_femto: int, d: float, d_f: float, d_c: float,
                          r_f: float, alpha: float) -> float:
    """Closed form for the symmetric layout: (1/N) * (d_f d_c / (d r_f))^alpha."""
    return (1.0 / n_femto) * (d_f * d_c / (d * r_f)) ** alpha


def _cross_distances(geom: NetworkGeometry, tx_at_ap: bool = False):
    """Clamped (D, D_0i, D_i0): cell-user->macro, femto-user-i->macro, cell-user->AP i."""
    dd = distance_matrix(geom, tx_at_ap=tx_at_ap)
    return dd[0, 0], dd[0, 1:], dd[1:, 0]


def link_budget_grid_closed_form(geom: NetworkGeometry, params: PropagationParams,
                                 tx_at_ap: bool = False) -> float:
    """Link budget from cross distances under equal outdoor exponents.

    L = K_fi R_f^-beta / (W^2 K_fo) * D^-alpha / sum_i D_0i^-alpha D_i0^-alpha.
    """
    if params.alpha_c != params.alpha_fo:
        raise ValueError("closed form requires alpha_c == alpha_fo")
    alpha = params.alpha_c
    d0, d_0i, d_i0 = _cross_distances(geom, tx_at_ap=tx_at_ap)
    r_f = max(geom.femto_radius, 1.0)
    own = params.k_fi * r_f ** -params.beta
    interference = float(np.sum(d_0i ** -alpha * d_i0 ** -alpha))
    if interference == 0.0:
        return np.inf
    return own / (params.w ** 2 * params.k_fo) * d0 ** -alpha / interference


def link_budget_slope_check(geom: NetworkGeometry, params: PropagationParams,
                            alpha: float, tx_at_ap: bool = False) -> bool:
    """True when the dB link budget increases with the outdoor exponent.

    The positive-slope condition compares the interference-weighted mean of
    ln(D_0i * D_i0) against ln(D): the budget grows with alpha whenever the
    typical interference distance product exceeds the signaling distance.
    Requires equal outdoor exponents.
    """
    if params.alpha_c != params.alpha_fo:
        raise ValueError("slope condition requires alpha_c == alpha_fo")
    d0, d_0i, d_i0 = _cross_distances(geom, tx_at_ap=tx_at_ap)
    prod = d_0i * d_i0
    weights = prod ** -alpha
    mean_log = float(weights @ np.log(prod)) / float(np.sum(weights))
    return mean_log > np.log(d0)


def gain_matrix_to_csv(gm: GainMatrix, path, which: str = "raw") -> None:
    """Dense row-major dump of the raw or normalized matrix."""
    mat = gm.raw if which == "raw" else gm.normalized
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"# gain matrix ({which}), n_femto={gm.n_femto}"])
        for row in mat:
            writer.writerow([f"{v:.16e}" for v in row])
