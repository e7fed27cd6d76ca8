"""Two-tier network layouts: one macrocell, N femtocell access points.

All coordinates are in meters. The macrocell base station sits at the
origin. Femtocell APs form either a square grid of extent ``grid_extent``
or fall uniformly on a disc of equivalent area; each femtocell user sits
on a circle of radius ``femto_radius`` around its AP. The cellular user
and the grid (or disc) center lie on the positive x axis.
"""

import csv
from dataclasses import dataclass

import numpy as np

# Distances shorter than the 1 m reference contribute no extra path gain.
REFERENCE_DISTANCE_M = 1.0


@dataclass
class NetworkGeometry:
    """Positions of every transmitter and receiver in one layout."""

    macro_bs: np.ndarray
    cell_radius: float
    femto_aps: np.ndarray        # (N, 2)
    femto_radius: float
    cellular_user: np.ndarray
    femto_users: np.ndarray      # (N, 2)
    grid_extent: float = 0.0

    @property
    def n_femto(self) -> int:
        return self.femto_aps.shape[0]

    def bs_positions(self) -> np.ndarray:
        """Receiver positions, row 0 = macro BS, rows 1..N = femto APs."""
        return np.vstack([self.macro_bs, self.femto_aps])

    def user_positions(self) -> np.ndarray:
        """Transmitter positions, row 0 = cellular user, rows 1..N = femto users."""
        return np.vstack([self.cellular_user, self.femto_users])

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        if self.femto_users.shape != self.femto_aps.shape:
            raise ValueError("femto_users and femto_aps must pair up one-to-one")
        own = np.linalg.norm(self.femto_users - self.femto_aps, axis=1)
        if self.n_femto and not np.allclose(own, self.femto_radius, rtol=1e-9, atol=1e-9):
            raise ValueError("femtocell users must sit on the femto_radius circle")
        if distance(self.cellular_user, self.macro_bs) > self.cell_radius * (1 + 1e-12):
            raise ValueError("cellular user lies outside the coverage radius")


def distance(a, b) -> float:
    """Euclidean distance between two 2-D points."""
    return float(np.hypot(*(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def gain_distance(a, b) -> float:
    """Distance clamped below at the 1 m reference, for gain evaluation."""
    return max(distance(a, b), REFERENCE_DISTANCE_M)


def _femto_user_ring(aps: np.ndarray, femto_radius: float, angles: np.ndarray) -> np.ndarray:
    return aps + femto_radius * np.column_stack([np.cos(angles), np.sin(angles)])


def make_grid_layout(
    n_femto: int,
    d_norm: float,
    df_norm: float,
    cell_radius: float = 1000.0,
    femto_radius: float = 30.0,
    grid_extent: float = 500.0,
) -> NetworkGeometry:
    """Square grid of femtocells centered at ``df_norm * cell_radius`` on the x axis.

    ``n_femto`` must be a perfect square. With sqrt(N) APs per dimension the
    spacing is ``grid_extent / (sqrt(N) - 1)`` so that the outermost APs span
    the full grid extent; a single femtocell sits at the grid center. Femto
    user i is placed on its AP circle at the deterministic angle 2*pi*i/N.
    The cellular user sits at ``d_norm * cell_radius`` on the x axis.
    """
    side = int(round(np.sqrt(n_femto)))
    if n_femto < 1 or side * side != n_femto:
        raise ValueError(f"n_femto must be a perfect square >= 1, got {n_femto}")
    if not (0.0 < d_norm <= 1.0 and 0.0 < df_norm <= 1.0):
        raise ValueError("d_norm and df_norm must lie in (0, 1]")

    center = np.array([df_norm * cell_radius, 0.0])
    if side > 1:
        offsets = (np.arange(side) - (side - 1) / 2.0) * (grid_extent / (side - 1))
    else:
        offsets = np.array([0.0])
    # x varies slowest so AP order runs column by column
    aps = np.array([[center[0] + ox, center[1] + oy] for ox in offsets for oy in offsets])

    angles = 2.0 * np.pi * np.arange(n_femto) / n_femto
    geom = NetworkGeometry(
        macro_bs=np.zeros(2),
        cell_radius=cell_radius,
        femto_aps=aps,
        femto_radius=femto_radius,
        cellular_user=np.array([d_norm * cell_radius, 0.0]),
        femto_users=_femto_user_ring(aps, femto_radius, angles),
        grid_extent=grid_extent,
    )
    geom.validate()
    return geom


def make_random_layout(
    n_femto: int,
    d_norm: float,
    df_norm: float,
    seed,
    cell_radius: float = 1000.0,
    femto_radius: float = 30.0,
    grid_extent: float = 500.0,
) -> NetworkGeometry:
    """Femtocell APs i.i.d. uniform on a disc of radius ``grid_extent / sqrt(pi)``.

    The disc (same area as the square grid) is centered at
    ``df_norm * cell_radius`` on the x axis. Femto user angles are uniform.
    ``seed`` may be anything accepted by ``np.random.default_rng``, including
    an existing Generator; fixed seeds give identical layouts.
    """
    if n_femto < 1:
        raise ValueError(f"n_femto must be >= 1, got {n_femto}")
    if not (0.0 < d_norm <= 1.0 and 0.0 < df_norm <= 1.0):
        raise ValueError("d_norm and df_norm must lie in (0, 1]")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    disc_radius = grid_extent / np.sqrt(np.pi)
    center = np.array([df_norm * cell_radius, 0.0])

    radii = disc_radius * np.sqrt(rng.uniform(size=n_femto))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_femto)
    aps = center + np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])
    user_angles = rng.uniform(0.0, 2.0 * np.pi, size=n_femto)

    geom = NetworkGeometry(
        macro_bs=np.zeros(2),
        cell_radius=cell_radius,
        femto_aps=aps,
        femto_radius=femto_radius,
        cellular_user=np.array([d_norm * cell_radius, 0.0]),
        femto_users=_femto_user_ring(aps, femto_radius, user_angles),
        grid_extent=grid_extent,
    )
    geom.validate()
    return geom


def distance_matrix(geom: NetworkGeometry, tx_at_ap: bool = False) -> np.ndarray:
    """Clamped distances D[i, j] from transmitting user j to BS i.

    With ``tx_at_ap`` femtocell transmissions are evaluated from the AP
    position instead of the user position on the femto_radius circle
    (the user's own AP link keeps the femto_radius separation either way).
    """
    users = geom.user_positions()
    if tx_at_ap and geom.n_femto:
        users = np.vstack([geom.cellular_user, geom.femto_aps])
    bss = geom.bs_positions()
    diff = bss[:, None, :] - users[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if tx_at_ap:
        idx = np.arange(1, geom.n_femto + 1)
        dist[idx, idx] = geom.femto_radius
    return np.maximum(dist, REFERENCE_DISTANCE_M)


def normalized_ap_distances(geom: NetworkGeometry) -> np.ndarray:
    """Femto AP distances from the macro BS, normalized by the cell radius."""
    return np.linalg.norm(geom.femto_aps - geom.macro_bs, axis=1) / geom.cell_radius


def layout_to_csv(geom: NetworkGeometry, path) -> None:
    """Write the layout as rows of (id, x_m, y_m, kind)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x_m", "y_m", "kind"])
        writer.writerow([0, f"{geom.macro_bs[0]:.6f}", f"{geom.macro_bs[1]:.6f}", "macro_bs"])
        for i, ap in enumerate(geom.femto_aps, start=1):
            writer.writerow([i, f"{ap[0]:.6f}", f"{ap[1]:.6f}", "femto_ap"])
        writer.writerow([0, f"{geom.cellular_user[0]:.6f}",
                         f"{geom.cellular_user[1]:.6f}", "cell_user"])
        for i, fu in enumerate(geom.femto_users, start=1):
            writer.writerow([i, f"{fu[0]:.6f}", f"{fu[1]:.6f}", "femto_user"])
