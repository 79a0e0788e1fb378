"""Selection dynamics: excitation bookkeeping and weight propagation.

Every propagation step reads one snapshot of weights and excitations and
writes fresh arrays, so the result does not depend on the order in which
groups are processed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import sparse


@dataclass(frozen=True)
class LearningParams:
    omega: float = 0.97
    alpha: float = 0.05
    beta: float = 0.3
    # Background excitation of a random group settles near 4 (rarely above 9);
    # a group that recognizes a letter climbs to about 20 over one block of ten
    # presentations. theta sits just below that peak.
    theta: float = 17.0
    theta_abs_coeff: float = 0.1
    # below theta on purpose: anything responding strongly to the current
    # letter is shielded from being overwritten by its neighbors
    theta_freeze: float = 8.0
    phi_zero: float = 2.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not 0 <= self.omega < 1:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("learning rates must be positive")
        if self.phi_zero <= 1:
            raise ValueError("phi_zero must exceed 1 so a stable input outranks q=1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.theta_abs_coeff < 0:
            raise ValueError("theta_abs_coeff must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GroupState:
    excitation: float = 0.0
    last_flips: int | None = None
    frozen: bool = False


def phi(q: int, params: LearningParams) -> float:
    if q < 0:
        raise ValueError("flip count cannot be negative")
    return params.phi_zero if q == 0 else 1.0 / q


def phi_array(q: np.ndarray, params: LearningParams) -> np.ndarray:
    q = np.asarray(q)
    return np.where(q == 0, params.phi_zero, 1.0 / np.maximum(q, 1))


def update_excitation(
    prev: GroupState,
    q: int | None,
    params: LearningParams,
    rng: np.random.Generator | None = None,
) -> GroupState:
    """Leaky excitation update for one group; ``q=None`` means no stimulus."""
    drive = 0.0 if q is None else phi(q, params)
    s = drive + params.omega * prev.excitation
    if params.noise_sigma > 0:
        s += rng.normal(0.0, params.noise_sigma)
    return replace(
        prev,
        excitation=s,
        last_flips=prev.last_flips if q is None else int(q),
        frozen=s >= params.theta_freeze,
    )


def update_excitations(
    prev: np.ndarray,
    q: np.ndarray | None,
    params: LearningParams,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Vector form of :func:`update_excitation` over a whole repertoire."""
    s = params.omega * prev
    if q is not None:
        s = phi_array(q, params) + s
    if params.noise_sigma > 0:
        s = s + rng.normal(0.0, params.noise_sigma, size=s.shape)
    return s


def _normalize_rows(
    weights: np.ndarray, delta: np.ndarray, rows: np.ndarray
) -> tuple[np.ndarray, int]:
    """Add ``delta`` to the selected groups and rescale each to max-abs 1."""
    out = weights.copy()
    cand = weights[rows] + delta
    scale = np.abs(cand).max(axis=(1, 2))
    ok = scale > 0
    out[rows[ok]] = cand[ok] / scale[ok, None, None]
    return out, int((~ok).sum())


@dataclass
class PropagationStats:
    updated: int = 0
    degenerate: int = 0


def propagate_recognition(
    weights: np.ndarray,
    excitations: np.ndarray,
    adjacency: sparse.csr_matrix,
    params: LearningParams,
    stats: PropagationStats | None = None,
) -> np.ndarray:
    """One synchronous weight-propagation step over the recognition repertoire.

    Each unfrozen group adds ``alpha * sum_l max(S_l - theta, 0) * W_l`` over
    its neighbors and is renormalized to a max-abs entry of 1. Frozen groups
    and groups receiving a zero update keep their matrix bit for bit.
    """
    r, n, _ = weights.shape
    gain = np.maximum(excitations - params.theta, 0.0)
    src = np.flatnonzero(gain)
    if src.size == 0:
        return weights.copy()
    flat = weights.reshape(r, n * n)
    delta = adjacency[:, src] @ (gain[src, None] * flat[src])
    delta *= params.alpha
    frozen = excitations >= params.theta_freeze
    rows = np.flatnonzero(~frozen & np.any(delta != 0, axis=1))
    out, bad = _normalize_rows(weights, delta[rows].reshape(-1, n, n), rows)
    if stats is not None:
        stats.updated += rows.size - bad
        stats.degenerate += bad
    return out


def compute_theta_abs(connection_counts: np.ndarray, params: LearningParams) -> np.ndarray:
    counts = np.asarray(connection_counts)
    if (counts <= 0).any():
        raise ValueError("every abstraction group needs at least one connection")
    return params.theta_abs_coeff * counts


def propagate_abstraction(
    abs_weights: np.ndarray,
    rec_weights: np.ndarray,
    excitations: np.ndarray,
    connections: sparse.csr_matrix,
    theta_abs: np.ndarray,
    params: LearningParams,
    stats: PropagationStats | None = None,
) -> np.ndarray:
    """Gated propagation from recognition groups into abstraction groups.

    The gate for abstraction group ``s`` is the summed excess excitation
    ``sum_v max(S_v - theta, 0)`` over its connected groups; only when it
    exceeds ``theta_abs[s]`` does the group take on
    ``beta * sum_v max(S_v - theta, 0) * W_v`` and get renormalized.
    """
    a, n, _ = abs_weights.shape
    r = rec_weights.shape[0]
    gain = np.maximum(excitations - params.theta, 0.0)
    gate = connections @ gain
    open_ = np.flatnonzero(gate > theta_abs)
    if open_.size == 0:
        return abs_weights.copy()
    src = np.flatnonzero(gain)
    flat = rec_weights.reshape(r, n * n)
    delta = connections[open_][:, src] @ (gain[src, None] * flat[src])
    delta *= params.beta
    nz = np.any(delta != 0, axis=1)
    rows = open_[nz]
    out, bad = _normalize_rows(abs_weights, delta[nz].reshape(-1, n, n), rows)
    if stats is not None:
        stats.updated += rows.size - bad
        stats.degenerate += bad
    return out
