"""Quasi-static Rayleigh Monte Carlo engine.

Trials at each SNR point are generated in fixed-size chunks. Chunk ``c`` of
SNR point ``i`` draws from its own counter-based stream keyed by
``(seed, i, c)``, and chunks are accumulated strictly in index order until the
stopping rule fires. Work done beyond the stopping chunk is discarded, so the
counts depend only on ``(seed, config)`` and never on the number of workers.
"""

import dataclasses
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .codes import get_code
from .constellation import constellation_by_name
from .decoders import DECODERS, decode
from .equivchan import GroupingScheme, equivalent_channel_matrix
from .errors import GroupUndecodable, InsufficientData

#: Two-sided 95 % normal quantile used for confidence half-widths.
Z95 = 1.959963984540054

CSV_HEADER = "snr_db,trials,symbol_errors,block_errors,ser,bler,ci95"


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a sweep's counts.

    ``grouping`` is a ``"0,1|2,3"`` string; ``None`` means the code's default
    grouping. ``workers`` only affects speed. ``noise_scale`` multiplies the
    noise (``0`` gives a noiseless diagnostic run).
    """

    code: str = "alamouti"
    decoder: str = "ml"
    grouping: Optional[str] = None
    constellation: str = "qam4"
    n_r: int = 1
    snr_db: tuple = (14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0)
    min_block_errors: int = 200
    max_trials: int = 10_000_000
    seed: int = 0
    workers: int = 1
    chunk_size: int = 10_000
    noise_scale: float = 1.0
    ordering: str = "auto"

    def __post_init__(self):
        snr = tuple(float(s) for s in np.atleast_1d(self.snr_db))
        object.__setattr__(self, "snr_db", snr)
        if len(snr) == 0:
            raise ValueError("SNR grid is empty")
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}; known: {', '.join(DECODERS)}")
        if self.n_r < 1:
            raise ValueError("n_r must be at least 1")
        if self.min_block_errors < 1 or self.max_trials < 1 or self.chunk_size < 1:
            raise ValueError("stopping rule and chunk size must be positive")
        if self.workers < 0:
            raise ValueError("workers must be >= 0 (0 means all CPUs)")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["snr_db"] = list(self.snr_db)
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        d = dict(d)
        if "snr_db" in d:
            d["snr_db"] = tuple(d["snr_db"])
        return cls(**d)


@dataclass(frozen=True)
class SimPoint:
    snr_db: float
    trials: int
    symbol_errors: int
    block_errors: int
    n: int

    @property
    def snr(self):
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def ser(self):
        return self.symbol_errors / (self.trials * self.n)

    @property
    def bler(self):
        return self.block_errors / self.trials

    @property
    def ci95(self):
        """Normal-approximation 95 % half-width of the SER."""
        p = self.ser
        return Z95 * np.sqrt(p * (1 - p) / (self.trials * self.n))

    @property
    def bler_ci95(self):
        p = self.bler
        return Z95 * np.sqrt(p * (1 - p) / self.trials)


@dataclass
class SimResult:
    config: SimConfig
    points: list
    wall_time: float = 0.0
    error: Optional[str] = field(default=None)

    def csv_text(self):
        out = io.StringIO(newline="")
        out.write(CSV_HEADER + "\n")
        for p in self.points:
            out.write(f"{p.snr_db:.17g},{p.trials},{p.symbol_errors},{p.block_errors},"
                      f"{p.ser:.17g},{p.bler:.17g},{p.ci95:.17g}\n")
        if self.error:
            out.write(f"# error: {self.error}\n")
        return out.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="\n") as f:
            f.write(self.csv_text())


def sample_channel(n_r, n_t, rng, size=None):
    """I.i.d. CN(0, 1) channel matrix, or a stack of ``size`` of them."""
    shape = (n_r, n_t) if size is None else (size, n_r, n_t)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def chunk_rng(seed, snr_index, chunk_index):
    """Counter-based stream for one chunk of one SNR point."""
    ss = np.random.SeedSequence(seed, spawn_key=(snr_index, chunk_index))
    return np.random.Generator(np.random.Philox(ss))


@lru_cache(maxsize=8)
def _setup(code_spec, constellation, grouping):
    code = get_code(code_spec)
    A = constellation_by_name(constellation)
    scheme = GroupingScheme.parse(grouping) if grouping else code.default_grouping
    return code, A, scheme


def _count_errors(config, code, A, scheme, H, xi, w, snr):
    G = equivalent_channel_matrix(code, H)
    y = np.sqrt(snr) * (G @ A.points[xi][..., None])[..., 0] + config.noise_scale * w
    res = decode(config.decoder, G, y, A, snr, scheme, config.ordering)
    wrong = res.symbol_indices != xi
    return int(np.count_nonzero(wrong)), int(np.count_nonzero(np.any(wrong, axis=1)))


def run_chunk(config, snr_index, chunk_index, size):
    """``(trials, symbol_errors, block_errors)`` for one chunk.

    On :class:`GroupUndecodable` the exception carries the offending
    channel in ``h`` and the counts of the trials before it in ``partial``.
    """
    code, A, scheme = _setup(config.code, config.constellation, config.grouping)
    rng = chunk_rng(config.seed, snr_index, chunk_index)
    H = sample_channel(config.n_r, code.n_t, rng, size)
    xi = rng.integers(A.size, size=(size, code.n))
    m = config.n_r * code.t
    w = (rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))) / np.sqrt(2)
    snr = 10.0 ** (config.snr_db[snr_index] / 10.0)
    try:
        se, be = _count_errors(config, code, A, scheme, H, xi, w, snr)
    except GroupUndecodable as exc:
        # the batch may not report the earliest failure; narrow it down
        stop = exc.index if exc.index is not None else size
        while True:
            try:
                se, be = _count_errors(config, code, A, scheme, H[:stop], xi[:stop], w[:stop], snr) if stop else (0, 0)
                break
            except GroupUndecodable as inner:
                exc = inner
                stop = inner.index if inner.index is not None else 0
        exc.index = stop
        exc.h = H[stop].copy() if stop < size else None
        exc.partial = (stop, se, be)
        raise exc
    return size, se, be


def _run_chunk_args(args):
    return run_chunk(*args)


def _resolve_workers(workers):
    return (os.cpu_count() or 1) if workers == 0 else workers


def run_sweep(config, executor=None):
    """Simulate every SNR point of ``config``.

    Raises
    ------
    GroupUndecodable
        With ``h`` set to the offending channel and ``partial`` set to a
        :class:`SimResult` holding the completed points plus the trials of
        the interrupted point that preceded the failure.
    """
    code, _, _ = _setup(config.code, config.constellation, config.grouping)
    workers = _resolve_workers(config.workers)
    own = executor is None and workers > 1
    if own:
        executor = ProcessPoolExecutor(max_workers=workers)
    start = time.perf_counter()
    points = []
    try:
        for i, snr_db in enumerate(config.snr_db):
            trials = se = be = 0
            chunk = 0
            done = False
            while not done:
                wave = []
                for c in range(chunk, chunk + max(1, workers)):
                    size = min(config.chunk_size, config.max_trials - c * config.chunk_size)
                    if size <= 0:
                        break
                    wave.append((config, i, c, size))
                if not wave:
                    break
                chunk += len(wave)
                if executor is not None and len(wave) > 1:
                    futures = [executor.submit(_run_chunk_args, a) for a in wave]
                else:
                    futures = None
                for k, args in enumerate(wave):
                    try:
                        t, s, b = futures[k].result() if futures else run_chunk(*args)
                    except GroupUndecodable as exc:
                        if futures:
                            for f in futures[k + 1:]:
                                f.cancel()
                        pt, ps, pb = exc.partial
                        partial = points + ([SimPoint(snr_db, trials + pt, se + ps, be + pb, code.n)]
                                            if trials + pt else [])
                        exc.partial = SimResult(config, partial, time.perf_counter() - start,
                                                error=f"GroupUndecodable at snr_db={snr_db:g}")
                        raise
                    trials, se, be = trials + t, se + s, be + b
                    if be >= config.min_block_errors or trials >= config.max_trials:
                        done = True
                        break
            points.append(SimPoint(snr_db, trials, se, be, code.n))
    finally:
        if own:
            executor.shutdown(cancel_futures=True)
    return SimResult(config, points, time.perf_counter() - start)


def _points(result):
    return list(result.points if isinstance(result, SimResult) else result)


def _window(points, window):
    if window is None:
        return points
    lo, hi = window
    return [p for p in points if lo - 1e-9 <= p.snr_db <= hi + 1e-9]


def estimate_diversity_order(result, window=(14.0, 26.0), min_block_errors=50):
    """Least-squares slope of ``log10(SER)`` against ``-SNR_dB / 10``.

    Raises
    ------
    InsufficientData
        If fewer than three points fall in ``window`` or any of them has
        fewer than ``min_block_errors`` block errors.
    """
    pts = _window(_points(result), window)
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 SNR points in the window, got {len(pts)}")
    weak = [p.snr_db for p in pts if p.block_errors < min_block_errors or p.ser <= 0]
    if weak:
        raise InsufficientData(f"fewer than {min_block_errors} block errors at {weak} dB")
    x = -np.array([p.snr_db for p in pts]) / 10.0
    y = np.log10([p.ser for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def estimate_coding_gain(result, diversity_order, window=None):
    """``min SNR^-D / BLER`` over the grid points in ``window`` (linear SNR)."""
    pts = _window(_points(result), window)
    if not pts:
        raise InsufficientData("no SNR points in the window")
    if any(p.block_errors == 0 for p in pts):
        raise InsufficientData("coding gain needs a nonzero BLER at every point")
    return float(min(p.snr ** -diversity_order / p.bler for p in pts))


def coding_gain_interval(result, diversity_order, window=None):
    """``(low, high)`` from the 95 % BLER intervals at every point."""
    pts = _window(_points(result), window)
    lo = min(p.snr ** -diversity_order / (p.bler + p.bler_ci95) for p in pts)
    floor = [p.bler - p.bler_ci95 for p in pts]
    hi = min(p.snr ** -diversity_order / f if f > 0 else np.inf for p, f in zip(pts, floor))
    return float(lo), float(hi)


@dataclass(frozen=True)
class ThetaPoint:
    theta: float
    coding_gain: float
    interval: tuple
    result: SimResult = field(repr=False, compare=False)


def sweep_theta(family, theta_grid, config, diversity_order=None, window=None):
    """Coding gain against the rotation angle of a code family.

    Every angle reuses ``config.seed``, so all angles see the same channels,
    symbols and noise (common random numbers). ``diversity_order`` defaults
    to ``n_r * n_t``.
    """
    if family not in ("code_2x3", "code_4x6"):
        raise ValueError(f"theta sweep supports code_2x3 and code_4x6, not {family!r}")
    n_t = get_code(family).n_t
    D = config.n_r * n_t if diversity_order is None else diversity_order
    workers = _resolve_workers(config.workers)
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    table = []
    try:
        for theta in theta_grid:
            cfg = config.replace(code=f"{family}:theta={float(theta)!r}")
            res = run_sweep(cfg, executor)
            table.append(ThetaPoint(float(theta), estimate_coding_gain(res, D, window),
                                    coding_gain_interval(res, D, window), res))
    finally:
        if executor is not None:
            executor.shutdown()
    return table
