"""Monte-Carlo wavefunction unraveling of the master equation.

Each trajectory evolves an unnormalized state under

    H_eff = H - (i/2) sum_c gamma_c c^+ c

and jumps when its squared norm falls below a uniform random threshold.
Because H_eff is time independent, the propagators for the step ``dt`` and
its binary subdivisions ``dt / 2^k`` are exponentiated once; a step that
crosses the threshold is split recursively, which pins the jump time to
``dt / 2^JUMP_LEVELS`` (about 1e-3 of the step).

Every trajectory owns a Philox stream keyed by ``(seed, trajectory index)``,
so the ensemble is bit-identical for a given seed whatever the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import fock
from .errors import DimensionError, HistogramError, NormUnderflowError
from .model import JumpChannel

log = logging.getLogger(__name__)

JUMP_LEVELS = 10

__all__ = [
    "TrajectoryConfig",
    "TrajectoryRecord",
    "EnsembleHistogram",
    "ProjectedState",
    "trajectory_rng",
    "run_trajectories",
    "ensemble_average",
    "histogram_at",
    "projected_state",
    "sign_flips",
    "LowEnergyStart",
    "JUMP_LEVELS",
]


@dataclass
class TrajectoryConfig:
    """Ensemble settings.  Times are in ns."""

    n_traj: int
    t_final: float
    dt_max: float
    seed: int = 0
    observables: Mapping[str, object] = field(default_factory=dict)
    record_stride: int = 1

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be > 0")
        if not self.t_final > 0:
            raise ValueError("t_final must be > 0")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        for name, op in self.observables.items():
            if not fock.is_hermitian(op, tol=1e-10):
                raise ValueError(f"observable {name!r} is not Hermitian")

    @property
    def n_steps(self) -> int:
        return int(np.ceil(self.t_final / self.dt_max - 1e-9))

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.record_steps * self.dt

    @property
    def record_steps(self) -> np.ndarray:
        # the final step is always recorded, even off-stride
        steps = np.arange(0, self.n_steps + 1, self.record_stride)
        if steps[-1] != self.n_steps:
            steps = np.append(steps, self.n_steps)
        return steps


@dataclass
class TrajectoryRecord:
    index: int
    times: np.ndarray
    traces: np.ndarray  # shape (n_times, n_observables)
    labels: tuple[str, ...]
    jump_times: np.ndarray
    jump_channels: np.ndarray
    final_state: np.ndarray

    def trace(self, label: str) -> np.ndarray:
        return self.traces[:, self.labels.index(label)]

    def jumps_of(self, channel: int) -> np.ndarray:
        return self.jump_times[self.jump_channels == channel]


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(index)]))


class _Propagator:
    """Precomputed pieces shared by all trajectories of one ensemble."""

    def __init__(self, h, channels, cfg: TrajectoryConfig):
        h = sp.csr_matrix(h).toarray()
        d = h.shape[0]
        self.dim = d
        self.ops = []
        self.rates = []
        decay = np.zeros((d, d), dtype=np.complex128)
        for ch in channels:
            if ch.rate == 0:
                continue
            c = sp.csr_matrix(ch.operator)
            if c.shape != (d, d):
                raise DimensionError(f"jump operator {ch.label!r} has shape {c.shape}")
            self.ops.append(c)
            self.rates.append(ch.angular_rate)
            decay += ch.angular_rate * (c.conj().T @ c).toarray()
        self.rates = np.array(self.rates)
        dt = cfg.dt
        worst = float(np.linalg.eigvalsh(decay).max()) if self.ops else 0.0
        if worst * dt > 12.0:
            raise NormUnderflowError(
                f"norm can decay by exp(-{worst * dt:.3g}) within one step; "
                f"reduce dt_max below {12.0 / worst:.3g} ns"
            )
        heff = h - 0.5j * decay
        self.steps = [sla.expm(-1j * heff * dt / 2 ** k) for k in range(JUMP_LEVELS + 1)]
        self.labels = tuple(cfg.observables)
        self.obs = [sp.csr_matrix(o) for o in cfg.observables.values()]
        for o in self.obs:
            if o.shape != (d, d):
                raise DimensionError(f"observable has shape {o.shape}, expected {(d, d)}")


class _Walker:
    """State of one trajectory between steps."""

    def __init__(self, prop: _Propagator, psi: np.ndarray, rng: np.random.Generator):
        self.prop = prop
        self.psi = psi
        self.rng = rng
        self.threshold = rng.random()
        self.t = 0.0
        self.jump_times: list[float] = []
        self.jump_channels: list[int] = []

    def advance(self, level: int, dt: float) -> None:
        trial = self.prop.steps[level] @ self.psi
        nrm = np.vdot(trial, trial).real
        if nrm > self.threshold:
            self.psi = trial
            self.t += dt / 2 ** level
            return
        if level == JUMP_LEVELS:
            self.t += dt / 2 ** level
            self.psi = trial
            self._jump()
            return
        self.advance(level + 1, dt)
        self.advance(level + 1, dt)

    def _jump(self) -> None:
        prop = self.prop
        if not prop.ops:
            return
        nrm = np.vdot(self.psi, self.psi).real
        if nrm < 1e-280:
            raise NormUnderflowError("trajectory norm underflowed; reduce dt_max")
        candidates = [op @ self.psi for op in prop.ops]
        weights = prop.rates * np.array([np.vdot(c, c).real for c in candidates])
        total = weights.sum()
        if total <= 0:
            # no channel can fire from this state: restart the clock
            self.psi = self.psi / np.sqrt(nrm)
            self.threshold = self.rng.random()
            return
        k = int(np.searchsorted(np.cumsum(weights), self.rng.random() * total, side="right"))
        k = min(k, len(candidates) - 1)
        new = candidates[k]
        self.psi = new / np.sqrt(np.vdot(new, new).real)
        self.jump_times.append(self.t)
        self.jump_channels.append(k)
        self.threshold = self.rng.random()


def _record(prop: _Propagator, psi: np.ndarray) -> np.ndarray:
    nrm = np.vdot(psi, psi).real
    return np.array([np.vdot(psi, o @ psi).real / nrm for o in prop.obs])


@dataclass(frozen=True)
class LowEnergyStart:
    """Picklable ``psi0`` sampler: random superposition of |s, n < n_max>."""

    spec: fock.HilbertSpec
    n_max: int = 3

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        return fock.random_low_energy_state(self.spec, rng, self.n_max)


def _run_one(prop: _Propagator, psi0, cfg: TrajectoryConfig, index: int) -> TrajectoryRecord:
    rng = trajectory_rng(cfg.seed, index)
    if callable(psi0):
        psi = np.asarray(psi0(rng), dtype=np.complex128)
    else:
        psi = np.array(psi0, dtype=np.complex128)
    psi = fock.normalize(psi)
    walker = _Walker(prop, psi, rng)
    dt = cfg.dt
    times = cfg.times
    traces = np.empty((times.size, len(prop.obs)))
    traces[0] = _record(prop, walker.psi)
    row = 1
    for step in range(1, cfg.n_steps + 1):
        walker.advance(0, dt)
        # the clock is re-anchored on the grid to avoid accumulating dt/2^k sums
        walker.t = step * dt
        if step % cfg.record_stride == 0 or step == cfg.n_steps:
            traces[row] = _record(prop, walker.psi)
            row += 1
    final = fock.normalize(walker.psi)
    return TrajectoryRecord(
        index=index,
        times=times,
        traces=traces,
        labels=prop.labels,
        jump_times=np.array(walker.jump_times),
        jump_channels=np.array(walker.jump_channels, dtype=int),
        final_state=final,
    )


def _run_chunk(args):
    h, channels, psi0, cfg, indices = args
    prop = _Propagator(h, channels, cfg)
    return [_run_one(prop, psi0, cfg, i) for i in indices]


def run_trajectories(h, channels: list[JumpChannel], psi0, cfg: TrajectoryConfig,
                     workers: int = 1,
                     progress: Callable[[int, int], None] | None = None) -> list[TrajectoryRecord]:
    """Run ``cfg.n_traj`` quantum trajectories.

    ``psi0`` is either a state vector or a callable ``psi0(rng)`` that draws
    an initial state from the trajectory's own random stream.  ``h`` is in
    rad/ns.  Records are returned ordered by trajectory index.
    """
    d = h.shape[0]
    if not callable(psi0):
        psi0 = np.asarray(psi0, dtype=np.complex128)
        if psi0.shape != (d,):
            raise DimensionError(f"initial state has shape {psi0.shape}, expected {(d,)}")
        if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
            raise ValueError("initial state must be normalized")
    indices = list(range(cfg.n_traj))
    if workers <= 1 or cfg.n_traj == 1:
        prop = _Propagator(h, channels, cfg)
        out = []
        for i in indices:
            out.append(_run_one(prop, psi0, cfg, i))
            if progress is not None:
                progress(i + 1, cfg.n_traj)
        return out
    chunks = [indices[k::workers] for k in range(workers)]
    chunks = [c for c in chunks if c]
    records: dict[int, TrajectoryRecord] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for batch in pool.map(_run_chunk, [(h, channels, psi0, cfg, c) for c in chunks]):
            for rec in batch:
                records[rec.index] = rec
            if progress is not None:
                progress(len(records), cfg.n_traj)
    return [records[i] for i in indices]


def ensemble_average(records: list[TrajectoryRecord], observable: int | str):
    """Pointwise mean and standard error across trajectories.

    Returns ``(times, mean, stderr)``; the standard error of a single
    trajectory is reported as zero.
    """
    if not records:
        raise HistogramError("no trajectory records")
    times = records[0].times
    for r in records[1:]:
        if r.times.shape != times.shape or not np.array_equal(r.times, times):
            raise ValueError("records do not share a time grid")
    col = records[0].labels.index(observable) if isinstance(observable, str) else observable
    data = np.stack([r.traces[:, col] for r in records])
    mean = data.mean(axis=0)
    if len(records) == 1:
        return times, mean, np.zeros_like(mean)
    stderr = data.std(axis=0, ddof=1) / np.sqrt(len(records))
    return times, mean, stderr


@dataclass
class EnsembleHistogram:
    edges: np.ndarray
    counts: np.ndarray
    label: str
    sample_time: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def peaks(self) -> list[int]:
        """Indices of local maxima (plateaus counted once, at their left edge)."""
        c = np.concatenate([[-1], self.counts, [-1]])
        out = []
        i = 1
        while i < len(c) - 1:
            j = i
            while j + 1 < len(c) - 1 and c[j + 1] == c[i]:
                j += 1
            if c[i] > 0 and c[i] > c[i - 1] and c[i] > c[j + 1]:
                out.append(i - 1)
            i = j + 1
        return out

    def modes(self, valley_ratio: float = 0.5, min_height: float = 0.25) -> list[int]:
        """Peaks that stand out from counting noise and from each other.

        Peaks lower than ``min_height`` times the tallest bin are dropped.
        Two neighbouring peaks are kept as distinct modes only when the
        lowest bin between them holds fewer than ``valley_ratio`` times the
        smaller of the two; otherwise the smaller peak is merged away.
        """
        top = self.counts.max() if self.counts.size else 0
        peaks = [i for i in self.peaks() if self.counts[i] >= min_height * top]
        changed = True
        while changed and len(peaks) > 1:
            changed = False
            for a, b in zip(peaks[:-1], peaks[1:]):
                valley = self.counts[a:b + 1].min()
                if valley >= valley_ratio * min(self.counts[a], self.counts[b]):
                    drop = a if self.counts[a] < self.counts[b] else b
                    peaks.remove(drop)
                    changed = True
                    break
        return peaks

    def is_bimodal(self, valley_ratio: float = 0.5, min_height: float = 0.25) -> bool:
        return len(self.modes(valley_ratio, min_height)) >= 2


def histogram_at(records: list[TrajectoryRecord], observable: int | str, t_sample: float,
                 bins=30, value_range: tuple[float, float] | None = None) -> EnsembleHistogram:
    """Histogram of single-trajectory expectations at the recorded time nearest ``t_sample``."""
    if not records:
        raise HistogramError("no trajectory records to histogram")
    times = records[0].times
    if not times[0] <= t_sample <= times[-1]:
        raise ValueError(f"t_sample {t_sample} outside recorded range [{times[0]}, {times[-1]}]")
    k = int(np.argmin(np.abs(times - t_sample)))
    col = records[0].labels.index(observable) if isinstance(observable, str) else observable
    values = np.array([r.traces[k, col] for r in records])
    if value_range is None:
        lo, hi = values.min(), values.max()
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        value_range = (lo, hi)
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    label = observable if isinstance(observable, str) else records[0].labels[col]
    return EnsembleHistogram(edges=edges, counts=counts, label=label, sample_time=float(times[k]))


@dataclass
class ProjectedState:
    unnormalized: np.ndarray
    weight: float
    normalized: np.ndarray | None

    @property
    def valid(self) -> bool:
        return self.normalized is not None


def projected_state(psi: np.ndarray, spec: fock.HilbertSpec) -> ProjectedState:
    """Excited-electronic projection ``s^+s |psi><psi| s^+s`` of a pure state."""
    psi = fock.normalize(psi)
    proj = fock.excited_projector(spec) @ psi
    rho = fock.ket_to_dm(proj)
    weight = float(np.vdot(proj, proj).real)
    if weight < 1e-14:
        return ProjectedState(unnormalized=rho, weight=0.0, normalized=None)
    return ProjectedState(unnormalized=rho, weight=weight, normalized=rho / weight)


def sign_flips(times: np.ndarray, trace: np.ndarray, level: float = 0.0) -> np.ndarray:
    """Times (right edge of the recording interval) where ``trace`` changes sign."""
    s = np.sign(np.asarray(trace) - level)
    idx = np.nonzero(s[1:] * s[:-1] < 0)[0] + 1
    return np.asarray(times)[idx]
