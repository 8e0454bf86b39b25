"""Semi-implicit Euler-Maruyama scheme for the stochastic heat equation on the torus.

One step maps ``u`` to::

    (I - dt/2 L_h)^{-1} [u + dt b(u) + sigma(u) dW / dx]

where ``L_h`` is the periodic second-difference operator and ``dW`` are
independent cell increments of variance ``dt * dx``.  The implicit solve is
diagonal in the ``rfft`` basis.  Replicas are advanced together as rows of a
2-d array; each row sees only its own noise stream, and rows never mix, so a
replica's path does not depend on which other replicas share the batch.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import check_ordered, same_function
from .exceptions import BlowupError, InvalidParameterError, PreconditionError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid of ``n`` points on ``[0, 1)`` with time step ``dt`` up to ``t_end``."""

    n: int
    dt: float
    t_end: float

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise InvalidParameterError(f"n must be a power of two >= 8, got {n!r}")
        for name in ("dt", "t_end"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {v!r}")
        if self.dt > self.dx:
            raise InvalidParameterError(f"dt={self.dt} exceeds dx={self.dx}")
        ratio = self.t_end / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise InvalidParameterError(f"t_end/dt = {ratio} is not an integer")

    @property
    def dx(self):
        return 1.0 / self.n

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def x(self):
        return np.arange(self.n) / self.n

    def damping(self):
        """Per-step ``rfft`` multipliers of the implicit heat solve."""
        k = np.arange(self.n // 2 + 1)
        return 1.0 / (1.0 + (2.0 * self.dt / self.dx ** 2) * np.sin(np.pi * k / self.n) ** 2)

    def with_horizon(self, t_end):
        return TorusGrid(self.n, self.dt, t_end)


class NoiseStream:
    """Counter-based standard normal stream keyed by ``(master_seed, replica)``.

    Draws are organised in blocks of ``BLOCK`` steps; block ``j`` is produced
    by a Philox generator whose counter starts at ``j`` in its top word, so
    the value for ``(step, cell)`` is a pure function of
    ``(master_seed, replica, n, step, cell)`` and can be reached without
    generating earlier steps.
    """

    BLOCK = 64

    def __init__(self, master_seed, replica=0):
        if int(replica) < 0:
            raise InvalidParameterError("replica index must be >= 0")
        self.master_seed = int(master_seed) & _MASK64
        self.replica = int(replica)
        self._key = np.random.SeedSequence([self.master_seed, self.replica]).generate_state(2, np.uint64)
        self._cache = (None, None, None)

    @property
    def identity(self):
        return (self.master_seed, self.replica)

    def block(self, index, n):
        cached_idx, cached_n, data = self._cache
        if cached_idx == index and cached_n == n:
            return data
        bitgen = np.random.Philox(key=self._key, counter=np.array([0, 0, 0, index], dtype=np.uint64))
        data = np.random.Generator(bitgen).standard_normal((self.BLOCK, n))
        self._cache = (index, n, data)
        return data

    def normals(self, step, n):
        """Standard normals for the transition ``step -> step + 1``."""
        return self.block(step // self.BLOCK, n)[step % self.BLOCK]

    def __repr__(self):
        return f"NoiseStream(master_seed={self.master_seed}, replica={self.replica})"


@dataclass(frozen=True, eq=False)
class PathTrajectory:
    """One realised path.

    Per-step arrays (``running_min`` and friends) are indexed by
    ``step - start_step`` and cover ``start_step .. end_step``.  Snapshots
    are full fields at ``snapshot_steps``.  ``stopped_step`` is set when a
    stopping level ended the run early; ``blowup_step`` when the field became
    non-finite (ensemble runs censor instead of raising).
    """

    grid: TorusGrid
    stride: int
    start_step: int
    snapshot_steps: np.ndarray
    snapshots: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    stream_id: tuple
    final: np.ndarray
    stopped_step: Optional[int] = None
    blowup_step: Optional[int] = None

    @property
    def end_step(self):
        return self.start_step + len(self.running_min) - 1

    @property
    def steps(self):
        return np.arange(self.start_step, self.end_step + 1)

    @property
    def times(self):
        return self.steps * self.grid.dt

    @property
    def fields(self):
        return self.snapshots

    @property
    def censored(self):
        return self.blowup_step is not None

    def snapshot(self, step):
        idx = np.searchsorted(self.snapshot_steps, step)
        if idx >= len(self.snapshot_steps) or self.snapshot_steps[idx] != step:
            raise PreconditionError(f"step {step} was not snapshotted (stride {self.stride}, start {self.start_step})")
        return self.snapshots[idx]

    def field_at(self, step):
        if step == self.end_step:
            return self.final
        return self.snapshot(step)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A batch of replicas with stacked per-step statistics.

    ``blowup_step[i] == -1`` marks an uncensored replica.
    """

    grid: TorusGrid
    stride: int
    start_step: int
    replicas: np.ndarray
    master_seed: int
    snapshot_steps: np.ndarray
    snapshots: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    final: np.ndarray
    blowup_step: np.ndarray
    first_below: Optional[np.ndarray] = None
    first_above: Optional[np.ndarray] = None
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.replicas)

    @property
    def censored(self):
        return self.blowup_step >= 0

    @property
    def times(self):
        return (self.start_step + np.arange(self.running_min.shape[1])) * self.grid.dt

    def path(self, i):
        b = int(self.blowup_step[i])
        return PathTrajectory(
            self.grid, self.stride, self.start_step, self.snapshot_steps, self.snapshots[i],
            self.running_min[i], self.running_max[i], self.mean[i], self.variance[i],
            (self.master_seed, int(self.replicas[i])), self.final[i],
            blowup_step=None if b < 0 else b)

    def sup_abs(self):
        """``sup_{t, x} |u|`` per replica from the per-step extrema."""
        return np.maximum(np.abs(self.running_min), np.abs(self.running_max)).max(axis=1)

    @staticmethod
    def concatenate(parts):
        parts = sorted(parts, key=lambda e: int(e.replicas[0]) if len(e) else -1)
        parts = [p for p in parts if len(p)]
        first = parts[0]
        cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
        opt = lambda name: None if getattr(first, name) is None else cat(name)  # noqa: E731
        return Ensemble(first.grid, first.stride, first.start_step, cat("replicas"), first.master_seed,
                        first.snapshot_steps, cat("snapshots"), cat("running_min"), cat("running_max"),
                        cat("mean"), cat("variance"), cat("final"), cat("blowup_step"),
                        opt("first_below"), opt("first_above"))


def _validate_u0(u0, grid, allow_negative):
    u0 = np.array(u0, dtype=float)
    if u0.ndim == 0:
        u0 = np.full(grid.n, float(u0))
    if u0.shape[-1] != grid.n:
        raise PreconditionError(f"initial field has {u0.shape[-1]} points, grid has {grid.n}")
    if not np.all(np.isfinite(u0)):
        raise PreconditionError("initial field is not finite")
    if not allow_negative and np.any(u0 < 0):
        raise PreconditionError("initial field must be non-negative")
    return u0


def _run(coef, U, grid, streams, stride, start_step, n_steps, stop_below=None, stop_above=None,
         halt=False, raise_blowup=True, check_start=True):
    """Advance the rows of ``U`` in place; returns a dict of recorded arrays."""
    R, n = U.shape
    damp = grid.damping()
    scale = math.sqrt(grid.dt / grid.dx)
    dt = grid.dt
    nrec = n_steps + 1
    mins = np.full((R, nrec), np.nan)
    maxs = np.full((R, nrec), np.nan)
    means = np.full((R, nrec), np.nan)
    varis = np.full((R, nrec), np.nan)
    snap_idx = [j for j in range(nrec) if (start_step + j) % stride == 0]
    snap_steps = np.array([start_step + j for j in snap_idx], dtype=np.int64)
    snaps = np.full((R, len(snap_idx), n), np.nan)
    snap_pos = {j: i for i, j in enumerate(snap_idx)}
    blowup = np.full(R, -1, dtype=np.int64)
    below = np.full(R, -1, dtype=np.int64) if stop_below is not None else None
    above = np.full(R, -1, dtype=np.int64) if stop_above is not None else None
    alive = np.ones(R, dtype=bool)
    zblock_idx, zblock = None, None

    def record(j, detect=True):
        mins[alive, j] = U[alive].min(axis=1)
        maxs[alive, j] = U[alive].max(axis=1)
        means[alive, j] = U[alive].mean(axis=1)
        varis[alive, j] = U[alive].var(axis=1)
        if j in snap_pos:
            snaps[alive, snap_pos[j]] = U[alive]
        step = start_step + j
        hit = False
        if not detect:
            return hit
        if below is not None:
            new = alive & (below < 0) & (mins[:, j] <= stop_below)
            below[new] = step
            hit = hit or new.any()
        if above is not None:
            new = alive & (above < 0) & (maxs[:, j] > stop_above)
            above[new] = step
            hit = hit or new.any()
        return hit

    last = 0
    stopped = record(0, check_start) and halt
    for j in range(1, nrec):
        if stopped:
            break
        step = start_step + j - 1
        blk = step // NoiseStream.BLOCK
        if blk != zblock_idx:
            zblock = np.stack([s.block(blk, n) for s in streams])
            zblock_idx = blk
        Z = zblock[:, step % NoiseStream.BLOCK]
        with np.errstate(all="ignore"):
            V = U + dt * coef.b(U) + coef.sigma(U) * (scale * Z)
            U_new = np.fft.irfft(np.fft.rfft(V, axis=1) * damp, n=n, axis=1)
        bad = alive & ~np.isfinite(U_new).all(axis=1)
        if bad.any():
            if raise_blowup:
                raise BlowupError(start_step + j, replica=streams[int(np.argmax(bad))].replica if R > 1 else None)
            blowup[bad] = start_step + j
            alive &= ~bad
            U_new[bad] = 0.0
        U[:] = U_new
        last = j
        stopped = record(j) and halt
    return dict(mins=mins[:, :last + 1], maxs=maxs[:, :last + 1], means=means[:, :last + 1],
                varis=varis[:, :last + 1], snaps=snaps[:, [i for i, j in enumerate(snap_idx) if j <= last]],
                snap_steps=snap_steps[snap_steps <= start_step + last], blowup=blowup,
                below=below, above=above, last=last)


def simulate(coef, u0, grid, noise, snapshot_stride=1, start_step=0, n_steps=None,
             stop_below=None, stop_above=None, allow_negative=False, check_start=True):
    """Run one path of the scheme.

    Parameters
    ----------
    coef
        Any object exposing vectorised ``b`` and ``sigma``.
    u0 : array_like or float
        Initial field (a scalar is broadcast).  Must be non-negative unless
        ``allow_negative``.
    grid : TorusGrid
    noise : NoiseStream
        Noise for the transition out of absolute step ``m`` is
        ``noise.normals(m, n)``, so restarts that keep ``start_step`` reuse
        the same driving noise.
    snapshot_stride : int
        Full fields are kept at absolute steps divisible by the stride.
    start_step, n_steps : int
        Absolute index of ``u0`` and number of steps (default: up to
        ``grid.steps``).
    stop_below, stop_above : float, optional
        End the run at the first step whose spatial min is ``<= stop_below``
        or whose max is ``> stop_above``.  With ``check_start=False`` the
        initial field is exempt, so only crossings strictly after
        ``start_step`` count.

    Raises
    ------
    BlowupError
        The field became non-finite.
    """
    if snapshot_stride < 1:
        raise InvalidParameterError("snapshot_stride must be >= 1")
    u0 = _validate_u0(u0, grid, allow_negative)
    if n_steps is None:
        n_steps = grid.steps - start_step
    if n_steps < 0:
        raise PreconditionError("start_step beyond the horizon")
    U = u0.reshape(1, -1).copy()
    out = _run(coef, U, grid, [noise], snapshot_stride, start_step, n_steps,
               stop_below, stop_above, halt=stop_below is not None or stop_above is not None,
               check_start=check_start)
    stopped = None
    for key in ("below", "above"):
        if out[key] is not None and out[key][0] >= 0:
            stopped = int(out[key][0]) if stopped is None else min(stopped, int(out[key][0]))
    return PathTrajectory(grid, snapshot_stride, start_step, out["snap_steps"], out["snaps"][0],
                          out["mins"][0], out["maxs"][0], out["means"][0], out["varis"][0],
                          noise.identity, U[0].copy(), stopped_step=stopped)


def simulate_ensemble(coef, u0, grid, master_seed, replicas, snapshot_stride=1, stop_below=None,
                      stop_above=None, allow_negative=False, batch=256):
    """Run replicas ``replicas`` (an iterable of indices) in batches.

    Non-finite rows are censored (``blowup_step``) rather than raised.
    ``stop_below``/``stop_above`` only record first crossing steps; rows keep
    evolving.  The result does not depend on ``batch``.
    """
    u0 = _validate_u0(u0, grid, allow_negative)
    reps = np.asarray(list(replicas), dtype=np.int64)
    parts = []
    for lo in range(0, len(reps), batch):
        chunk = reps[lo:lo + batch]
        streams = [NoiseStream(master_seed, int(r)) for r in chunk]
        U = np.tile(u0, (len(chunk), 1))
        out = _run(coef, U, grid, streams, snapshot_stride, 0, grid.steps, stop_below, stop_above,
                   raise_blowup=False)
        parts.append(Ensemble(grid, snapshot_stride, 0, chunk, int(master_seed) & _MASK64, out["snap_steps"],
                              out["snaps"], out["mins"], out["maxs"], out["means"], out["varis"], U.copy(),
                              out["blowup"], out["below"], out["above"]))
    if not parts:
        raise InvalidParameterError("no replicas requested")
    return parts[0] if len(parts) == 1 else Ensemble.concatenate(parts)


def _check_pair(coef1, coef2, u0_1, u0_2, z_max):
    check_ordered(coef1, coef2, z_max, "b")
    if not same_function(coef1, coef2, z_max, "sigma"):
        raise PreconditionError("paired coefficients must share sigma")
    if np.any(u0_1 > u0_2):
        i = int(np.argmax(u0_1 > u0_2))
        raise PreconditionError(f"u0_1 > u0_2 at grid index {i}")


def simulate_pair_common_noise(coef1, coef2, u0_1, u0_2, grid, noise, snapshot_stride=1, z_max=None,
                               check=True):
    """Two paths driven by the same noise, for pointwise comparison.

    With ``check`` the drifts must satisfy ``b1 <= b2`` on ``[0, z_max]``
    (default ``4 * max(u0_2) + 4``), sigma must agree, and ``u0_1 <= u0_2``.
    """
    u0_1 = _validate_u0(u0_1, grid, False)
    u0_2 = _validate_u0(u0_2, grid, False)
    if check:
        _check_pair(coef1, coef2, u0_1, u0_2, z_max or 4.0 * float(np.max(u0_2)) + 4.0)
    p1 = simulate(coef1, u0_1, grid, noise, snapshot_stride)
    p2 = simulate(coef2, u0_2, grid, noise, snapshot_stride)
    return p1, p2


def simulate_pair_ensemble(coef1, coef2, u0_1, u0_2, grid, master_seed, replicas, snapshot_stride=1,
                           z_max=None, check=True):
    """Ensemble version of :func:`simulate_pair_common_noise`; replica ``i`` shares noise across the pair."""
    u0_1 = _validate_u0(u0_1, grid, False)
    u0_2 = _validate_u0(u0_2, grid, False)
    if check:
        _check_pair(coef1, coef2, u0_1, u0_2, z_max or 4.0 * float(np.max(u0_2)) + 4.0)
    e1 = simulate_ensemble(coef1, u0_1, grid, master_seed, replicas, snapshot_stride)
    e2 = simulate_ensemble(coef2, u0_2, grid, master_seed, replicas, snapshot_stride)
    return e1, e2


def restart_from(trajectory, step_index, coef, noise=None, n_steps=None, snapshot_stride=None,
                 stop_below=None, stop_above=None, allow_negative=True, check_start=True):
    """Continue from the stored field at absolute ``step_index``.

    ``noise=None`` reuses the trajectory's own stream, so the continuation
    sees the same increments it would have seen without the restart.  Pass a
    different :class:`NoiseStream` for fresh noise.
    """
    u = trajectory.field_at(step_index)
    if noise is None:
        noise = NoiseStream(*trajectory.stream_id)
    return simulate(coef, u, trajectory.grid, noise, snapshot_stride or trajectory.stride,
                    start_step=step_index, n_steps=n_steps, stop_below=stop_below, stop_above=stop_above,
                    allow_negative=allow_negative, check_start=check_start)
