"""Plant model, modal decomposition, and per-node detectability.

The plant is a discrete-time LTI system x[k+1] = A x[k] observed through
per-node output maps y_i = C_i x.  A is required to have a real, simple
spectrum so a coordinate change z = Psi^-1 x diagonalizes the dynamics and
every state variable becomes an independent scalar mode z_j[k+1] = lam_j z_j[k].
Detectability of a mode by a node then reduces to a nonzero-column test on
the transformed output matrix, which is how nodes are split into sources and
followers for each marginally-stable/unstable mode.

Mode and node indices are 1-based throughout the package; numpy arrays are
indexed with the usual offset at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ComplexSpectrum, NonSimpleSpectrum, SingularPsi


@dataclass(frozen=True)
class LtiSystem:
    """Square plant matrix with an initial state."""

    a: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("A must be square")
        if not np.all(np.isfinite(a)):
            raise ValueError("A must be finite-valued")
        if x0.shape[0] != a.shape[0]:
            raise ValueError("x0 length must match A")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class DiagonalizedSystem:
    """Eigenstructure of the plant: x = Psi z, z[k+1] = diag(lam) z[k]."""

    psi: np.ndarray
    psi_inv: np.ndarray
    eigenvalues: tuple        # lam_1..lam_n, order fixes the mode indices
    unstable_modes: tuple     # 1-based indices j with |lam_j| >= 1
    z0: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def lam(self, mode: int) -> float:
        return self.eigenvalues[mode - 1]

    def is_unstable(self, mode: int) -> bool:
        return mode in self.unstable_modes


def _check_simple_real(values, eig_tol):
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.max(np.abs(np.imag(values))) > eig_tol * scale:
        raise ComplexSpectrum(f"eigenvalues not real within tol: {values}")
    real = np.real(values)
    srt = np.sort(real)
    gaps = np.diff(srt)
    if len(gaps) and np.min(gaps) <= eig_tol * scale:
        raise NonSimpleSpectrum(f"repeated eigenvalue within tol: {sorted(real)}")
    return real


def diagonalize(sys: LtiSystem, psi=None, eig_tol: float = 1e-8,
                diag_tol: float = 1e-9) -> DiagonalizedSystem:
    """Diagonalize the plant, either through a supplied eigenvector matrix
    (validated) or an internally computed eigendecomposition.

    Rejects complex or repeated spectra; the simulator depends on each mode
    being an independent real scalar recursion.
    """
    a = sys.a
    if psi is not None:
        psi = np.asarray(psi, dtype=float)
        if psi.shape != a.shape:
            raise SingularPsi("psi must match A's shape")
        try:
            psi_inv = np.linalg.inv(psi)
        except np.linalg.LinAlgError as exc:
            raise SingularPsi(f"psi is singular: {exc}") from exc
        if not np.all(np.isfinite(psi_inv)) or np.linalg.cond(psi) > 1e14:
            raise SingularPsi("psi is numerically singular")
        a_bar = psi_inv @ a @ psi
        off = a_bar - np.diag(np.diag(a_bar))
        scale = max(1.0, float(np.max(np.abs(a_bar))))
        if np.max(np.abs(off)) > diag_tol * scale:
            raise SingularPsi(
                f"psi does not diagonalize A (max off-diagonal {np.max(np.abs(off)):.3e})")
        lam = _check_simple_real(np.diag(a_bar), eig_tol)
    else:
        w, v = np.linalg.eig(a)
        lam_c = _check_simple_real(w, eig_tol)
        # sort descending so computed mode order is deterministic
        order = np.argsort(-lam_c)
        lam = lam_c[order]
        psi = np.real(v[:, order])
        try:
            psi_inv = np.linalg.inv(psi)
        except np.linalg.LinAlgError as exc:
            raise SingularPsi(f"computed eigenvectors singular: {exc}") from exc

    # strict arithmetic on the computed eigenvalues, no tolerance band
    unstable = tuple(j for j, l in enumerate(lam, start=1) if abs(l) >= 1.0)
    z0 = psi_inv @ sys.x0
    return DiagonalizedSystem(psi=psi, psi_inv=psi_inv,
                              eigenvalues=tuple(float(l) for l in lam),
                              unstable_modes=unstable, z0=z0)


def transform_initial(sys: LtiSystem, diag: DiagonalizedSystem) -> np.ndarray:
    """Initial state in modal coordinates, z0 = Psi^-1 x0."""
    return diag.psi_inv @ sys.x0


def step_truth(z: np.ndarray, diag: DiagonalizedSystem) -> np.ndarray:
    """One step of the modal dynamics: z_next[j] = lam_j z[j]."""
    return np.asarray(diag.eigenvalues) * np.asarray(z, dtype=float)


@dataclass(frozen=True)
class ObservationModel:
    """Per-node output map and its modal transform c_bar = C Psi."""

    node: int
    c: np.ndarray
    c_bar: np.ndarray

    @staticmethod
    def build(node: int, c, diag: DiagonalizedSystem) -> "ObservationModel":
        c = np.atleast_2d(np.asarray(c, dtype=float))
        if c.shape[1] != diag.n:
            raise ValueError(f"C_{node} must have {diag.n} columns")
        return ObservationModel(node=node, c=c, c_bar=c @ diag.psi)


def detectable_modes(obs: ObservationModel, diag: DiagonalizedSystem,
                     tol: float = 1e-9) -> tuple[tuple, tuple]:
    """Split mode indices into detectable / undetectable sets for one node.

    With a diagonal, simple spectrum the PBH test degenerates to a column
    test: mode j is detectable iff column j of c_bar is nonzero.  The
    threshold is relative to the largest entry of c_bar so that row scaling
    of C does not change the verdict.
    """
    c_bar = obs.c_bar
    scale = float(np.max(np.abs(c_bar))) if c_bar.size else 0.0
    detectable = []
    undetectable = []
    for j in range(1, diag.n + 1):
        col = c_bar[:, j - 1]
        if scale > 0.0 and float(np.linalg.norm(col)) > tol * scale:
            detectable.append(j)
        else:
            undetectable.append(j)
    return tuple(detectable), tuple(undetectable)


@dataclass(frozen=True)
class ModeSets:
    """Detectability bookkeeping for every node plus per-mode source sets."""

    detectable: dict          # node -> tuple of mode indices (D_i)
    undetectable: dict        # node -> tuple of mode indices (U_i)
    lam_blocks: dict = field(repr=False, default=None)   # node -> np diag vector
    c_blocks: dict = field(repr=False, default=None)     # node -> detectable cols of c_bar
    sources: dict = None      # unstable mode j -> frozenset of node ids

    @staticmethod
    def build(diag: DiagonalizedSystem, observations: dict,
              tol: float = 1e-9) -> "ModeSets":
        det, undet, lam_blocks, c_blocks = {}, {}, {}, {}
        for node in sorted(observations):
            obs = observations[node]
            d, u = detectable_modes(obs, diag, tol=tol)
            det[node], undet[node] = d, u
            lam_blocks[node] = np.array([diag.lam(j) for j in d])
            c_blocks[node] = obs.c_bar[:, [j - 1 for j in d]] if d else np.zeros((obs.c_bar.shape[0], 0))
        sources = source_sets(det, diag.unstable_modes)
        return ModeSets(detectable=det, undetectable=undet,
                        lam_blocks=lam_blocks, c_blocks=c_blocks, sources=sources)

    def is_source(self, node: int, mode: int) -> bool:
        return node in self.sources.get(mode, frozenset())


def source_sets(detectable_by_node: dict, unstable_modes) -> dict:
    """Map each unstable mode j to its source set { i : j in D_i }.

    An empty source set is reported as-is; the preflight check flags it.
    """
    return {j: frozenset(i for i, d in detectable_by_node.items() if j in d)
            for j in unstable_modes}
