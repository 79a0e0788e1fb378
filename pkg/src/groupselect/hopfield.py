"""Binary Hopfield groups: random initialization, cyclic convergence, energy.

Patterns are 0/1 ``uint8`` vectors and weight matrices are symmetric
``float64`` arrays with a zero diagonal. A neuron switches on when its
weighted input is at least zero, so the all-zero pattern is never stable.

Two convergence paths are provided. :func:`converge` works on one group and
can record its trajectory; :func:`converge_batch` runs the same schedule on a
stack of groups at once and is what the simulation uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Raised when a pattern or matrix does not have the expected size."""


@dataclass
class ConvergenceResult:
    stable_state: np.ndarray
    flips: int
    visits: int
    # states after each flip, only filled when requested
    trajectory: list[np.ndarray] = field(default_factory=list, repr=False)


def as_pattern(bits, n: int | None = None) -> np.ndarray:
    """Coerce ``bits`` to a 0/1 ``uint8`` vector, checking its length."""
    p = np.asarray(bits)
    if p.ndim != 1:
        raise DimensionError(f"pattern must be one-dimensional, got shape {p.shape}")
    if p.size and not np.isin(p, (0, 1)).all():
        raise ValueError("pattern entries must be 0 or 1")
    if n is not None and p.size != n:
        raise DimensionError(f"pattern has length {p.size}, expected {n}")
    return p.astype(np.uint8)


def _check_matrix(w: np.ndarray) -> int:
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionError(f"weight matrix must be square, got shape {w.shape}")
    return w.shape[0]


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def new_random_group(n: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric zero-diagonal matrix with independent +/-1 off-diagonal pairs."""
    if n < 1:
        raise DimensionError(f"neuron count must be positive, got {n}")
    w = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    w[iu] = rng.choice((-1.0, 1.0), size=iu[0].size)
    w.T[iu] = w[iu]
    return w


def mutate_weights(w: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Copy of ``w`` with ``count`` distinct pairs resampled from {+1, -1}.

    A resampled pair can come out with its old value, so the copy differs
    from ``w`` in at most ``count`` pairs.
    """
    n = _check_matrix(w)
    total = n_pairs(n)
    if not 0 <= count <= total:
        raise ValueError(f"cannot resample {count} of {total} weight pairs")
    out = w.copy()
    if count == 0:
        return out
    rows, cols = np.triu_indices(n, 1)
    pick = rng.choice(total, size=count, replace=False)
    vals = rng.choice((-1.0, 1.0), size=count)
    out[rows[pick], cols[pick]] = vals
    out[cols[pick], rows[pick]] = vals
    return out


def neuron_update(state, w: np.ndarray, k: int) -> int:
    n = _check_matrix(w)
    s = as_pattern(state, n)
    if not 0 <= k < n:
        raise IndexError(f"neuron index {k} out of range for {n} neurons")
    return int((w[k] * s).sum() >= 0)


def energy(w: np.ndarray, state) -> float:
    n = _check_matrix(w)
    s = as_pattern(state, n).astype(float)
    return float(-0.5 * s @ w @ s)


def converge(w: np.ndarray, initial, record: bool = False) -> ConvergenceResult:
    """Update neurons 0, 1, ..., n-1, 0, ... until n visits in a row change nothing.

    ``flips`` counts the visits that changed a neuron. A pattern that is
    already stable therefore returns with zero flips after n visits.
    """
    n = _check_matrix(w)
    s = as_pattern(initial, n).copy()
    flips = visits = quiet = 0
    trajectory = [s.copy()] if record else []
    k = 0
    while quiet < n:
        new = 1 if (w[k] * s).sum() >= 0 else 0
        visits += 1
        if new != s[k]:
            s[k] = new
            flips += 1
            quiet = 0
            if record:
                trajectory.append(s.copy())
        else:
            quiet += 1
        k = (k + 1) % n
    return ConvergenceResult(s, flips, visits, trajectory)


def is_stable(w: np.ndarray, p) -> bool:
    n = _check_matrix(w)
    s = as_pattern(p, n)
    h = (w * s).sum(axis=1)
    return bool(np.array_equal(h >= 0, s == 1))


def converge_batch(weights: np.ndarray, initial) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Converge every group in a ``(m, n, n)`` stack.

    ``initial`` is one pattern shared by all groups or an ``(m, n)`` array of
    per-group starts. Follows exactly the schedule of :func:`converge` for
    each group. Returns ``(states, flips, visits)`` with shapes ``(m, n)``,
    ``(m,)``, ``(m,)``.
    """
    if weights.ndim != 3 or weights.shape[1] != weights.shape[2]:
        raise DimensionError(f"expected a (m, n, n) weight stack, got {weights.shape}")
    m, n = weights.shape[:2]
    init = np.asarray(initial)
    if init.ndim == 2:
        if init.shape != (m, n):
            raise DimensionError(f"per-group starts must have shape {(m, n)}, got {init.shape}")
        if init.size and not np.isin(init, (0, 1)).all():
            raise ValueError("pattern entries must be 0 or 1")
        start = init.astype(np.uint8)
    else:
        start = as_pattern(init, n)

    states = np.empty((m, n), dtype=np.uint8)
    flips = np.zeros(m, dtype=np.int64)
    visits = np.zeros(m, dtype=np.int64)

    ids = np.arange(m)
    w = weights
    s = np.broadcast_to(start, (m, n)).copy()
    fl = np.zeros(m, dtype=np.int64)
    quiet = np.zeros(m, dtype=np.int64)
    finished_at = np.full(m, -1, dtype=np.int64)
    v = 0
    while ids.size:
        for k in range(n):
            new = ((w[:, k, :] * s).sum(axis=1) >= 0).astype(np.uint8)
            changed = new != s[:, k]
            s[:, k] = new
            fl += changed
            quiet = np.where(changed, 0, quiet + 1)
            v += 1
            finished_at[(quiet == n) & (finished_at < 0)] = v
        # a group with n quiet visits is stable and stays put, so drop it
        done = finished_at >= 0
        if done.any():
            states[ids[done]] = s[done]
            flips[ids[done]] = fl[done]
            visits[ids[done]] = finished_at[done]
            keep = ~done
            ids, w, s, fl, quiet, finished_at = (
                ids[keep], w[keep], s[keep], fl[keep], quiet[keep], finished_at[keep])
    return states, flips, visits


def stable_mask(weights: np.ndarray, patterns) -> np.ndarray:
    """Boolean ``(m, len(patterns))`` table: is pattern j stable in group i."""
    pats = np.atleast_2d(np.asarray(patterns, dtype=np.uint8))
    m = weights.shape[0]
    out = np.empty((m, pats.shape[0]), dtype=bool)
    for j, p in enumerate(pats):
        h = (weights * p).sum(axis=2)
        out[:, j] = ((h >= 0) == (p == 1)).all(axis=1)
    return out


def stable_states(w: np.ndarray, limit: int = 20) -> np.ndarray:
    """All stable patterns of one group by exhaustive scan, for ``n <= limit``."""
    n = _check_matrix(w)
    if n > limit:
        raise ValueError(
            f"exhaustive scan over 2**{n} states refused; n must be at most {limit}")
    codes = np.arange(2 ** n, dtype=np.int64)
    found = []
    w = np.asarray(w, dtype=float)
    # fields summed as in is_stable so ties at zero resolve identically
    for lo in range(0, codes.size, 4096):
        c = codes[lo:lo + 4096]
        bits = ((c[:, None] >> np.arange(n)) & 1).astype(np.uint8)
        h = (w[None, :, :] * bits[:, None, :]).sum(axis=2)
        ok = ((h >= 0) == (bits == 1)).all(axis=1)
        found.append(bits[ok])
    return np.concatenate(found)
