"""Local observers for the modes a node can detect on its own.

Each source node runs a Luenberger recursion on the diagonal block of its
detectable modes; the closed loop (Lambda - L C_bar) must be Schur stable,
which is re-verified numerically no matter how the gain was produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotSchurStable, PlacementFailed

DEFAULT_POLE = 0.5


def closed_loop_radius(lam_diag, c_bar, gain) -> float:
    lam = np.diag(np.asarray(lam_diag, dtype=float).reshape(-1))
    cl = lam - np.asarray(gain, dtype=float) @ np.asarray(c_bar, dtype=float)
    return float(np.max(np.abs(np.linalg.eigvals(cl)))) if cl.size else 0.0


def design_gain(lam_diag, c_bar, pole_target: float = DEFAULT_POLE,
                explicit=None) -> np.ndarray:
    """Produce (or validate) an observer gain with a Schur-stable closed loop.

    An explicit gain is only checked.  Otherwise the closed-loop poles are
    placed at pole_target: directly when c_bar is square and invertible,
    via pole placement on the transposed pair otherwise.
    """
    lam = np.asarray(lam_diag, dtype=float).reshape(-1)
    c_bar = np.atleast_2d(np.asarray(c_bar, dtype=float))
    rho = lam.shape[0]
    r = c_bar.shape[0]
    if c_bar.shape[1] != rho:
        raise DimensionMismatch(f"c_bar must have {rho} columns, got {c_bar.shape[1]}")

    if explicit is not None:
        gain = np.atleast_2d(np.asarray(explicit, dtype=float))
        if gain.shape != (rho, r):
            raise DimensionMismatch(f"gain must be {rho}x{r}, got {gain.shape}")
        radius = closed_loop_radius(lam, c_bar, gain)
        if radius >= 1.0:
            raise NotSchurStable(f"explicit gain leaves spectral radius {radius:.4f}")
        return gain

    if not 0.0 <= pole_target < 1.0:
        raise PlacementFailed(f"pole target {pole_target} outside [0, 1)")

    if rho == 0:
        return np.zeros((0, r))
    if r == rho:
        try:
            gain = (np.diag(lam) - pole_target * np.eye(rho)) @ np.linalg.inv(c_bar)
        except np.linalg.LinAlgError:
            gain = _place_transposed(lam, c_bar, pole_target)
    else:
        gain = _place_transposed(lam, c_bar, pole_target)

    radius = closed_loop_radius(lam, c_bar, gain)
    if radius >= 1.0:
        raise PlacementFailed(f"placement left spectral radius {radius:.4f}")
    return gain


def _place_transposed(lam, c_bar, pole_target):
    from scipy.signal import place_poles

    rho = lam.shape[0]
    # place_poles dislikes repeated poles beyond rank(B); spread them slightly
    spread = 0.02 * np.arange(rho)
    poles = np.clip(pole_target + spread - spread.mean() if rho > 1 else [pole_target],
                    -0.99, 0.99)
    try:
        result = place_poles(np.diag(lam).T, c_bar.T, np.sort(poles))
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise PlacementFailed(f"pole placement failed: {exc}") from exc
    return result.gain_matrix.T


@dataclass
class LuenbergerObserver:
    """State estimator for one node's detectable sub-state."""

    node: int
    lam_diag: np.ndarray    # detectable eigenvalues, diagonal of Lambda_i
    c_bar: np.ndarray       # detectable columns of the transformed output map
    gain: np.ndarray
    z_hat: np.ndarray

    def __post_init__(self):
        self.lam_diag = np.asarray(self.lam_diag, dtype=float).reshape(-1)
        self.c_bar = np.atleast_2d(np.asarray(self.c_bar, dtype=float))
        self.gain = np.atleast_2d(np.asarray(self.gain, dtype=float))
        self.z_hat = np.asarray(self.z_hat, dtype=float).reshape(-1)
        radius = closed_loop_radius(self.lam_diag, self.c_bar, self.gain)
        if radius >= 1.0:
            raise NotSchurStable(
                f"observer for node {self.node} has spectral radius {radius:.4f}")

    @property
    def n_outputs(self) -> int:
        return self.c_bar.shape[0]


def luenberger_step(obs: LuenbergerObserver, y) -> np.ndarray:
    """One correction step: z' = Lambda z + L (y - C_bar z).

    The estimation error then contracts by the closed-loop matrix exactly.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != obs.n_outputs:
        raise DimensionMismatch(f"measurement length {y.shape[0]} != {obs.n_outputs}")
    innovation = y - obs.c_bar @ obs.z_hat
    obs.z_hat = obs.lam_diag * obs.z_hat + obs.gain @ innovation
    return obs.z_hat
