"""Simulation study of difference-based estimators on ``5 sin(w pi x)``.

Noise for replicate ``i`` of cell ``c`` is drawn from a Philox stream keyed
by ``(seed, c)`` whose counter is positioned at ``i``, so every replicate is
reproducible on its own and results do not depend on chunking or on the
order in which cells run.
"""

import csv
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from .estimator import estimate_variance
from .exceptions import BoundsError, InsufficientDataError
from .seqgen import DifferenceSequence, check_order_level, generate

AMPLITUDE = 5.0
DEFAULT_REPLICATIONS = 2000
MIN_REPLICATIONS = 100
CHUNK_ELEMENTS = 1 << 21

STUDY_CANDIDATES = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 0), (4, 1), (4, 2), (4, 3))
_SIGMAS = tuple(round(0.2 * i, 10) for i in range(1, 11))
_OMEGAS = tuple(round(0.5 * i, 10) for i in range(1, 11))
_SWEEP_N = tuple(range(25, 501, 25))


def normal_block(seed, cell, stream, start, count, n):
    """Standard normals for replicates ``start .. start + count - 1``, shape ``(count, n)``."""
    per_rep = -(-n // 4)
    bits = np.random.Philox(key=[seed, cell], counter=[0, 0, stream, 0])
    bits.advance(start * per_rep)
    raw = bits.random_raw(count * per_rep * 4).reshape(count, per_rep * 4)[:, :n]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


@dataclass(frozen=True)
class SimulationConfig:
    n_values: tuple
    sigma_values: tuple
    omega_values: tuple
    candidates: tuple
    replications: int = DEFAULT_REPLICATIONS
    seed: int = 20240101
    amplitude: float = AMPLITUDE
    common_random_numbers: bool = True
    name: str = "custom"

    def __post_init__(self):
        for attr in ("n_values", "sigma_values", "omega_values"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "candidates", tuple((int(r), int(k)) for r, k in self.candidates))
        if self.replications < MIN_REPLICATIONS:
            raise ValueError(f"replications must be at least {MIN_REPLICATIONS}, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (self.n_values and self.sigma_values and self.omega_values and self.candidates):
            raise ValueError("every grid axis and the candidate list must be non-empty")
        if any(s <= 0 for s in self.sigma_values):
            raise ValueError("sigma values must be positive")
        for r, k in self.candidates:
            check_order_level(r, k)
        r_max = max(r for r, _ in self.candidates)
        if min(self.n_values) <= r_max:
            raise InsufficientDataError(f"every n must exceed the largest candidate order {r_max}")

    def cells(self):
        """``(index, n, sigma, omega)`` in the fixed enumeration order."""
        grid = itertools.product(self.n_values, self.sigma_values, self.omega_values)
        return [(i, n, s, w) for i, (n, s, w) in enumerate(grid)]

    def replace(self, **changes):
        return SimulationConfig(**{**asdict(self), **changes})

    def to_dict(self):
        out = asdict(self)
        out["candidates"] = [list(c) for c in self.candidates]
        for attr in ("n_values", "sigma_values", "omega_values"):
            out[attr] = list(out[attr])
        return out


def preset(name, **overrides):
    """Named study grids: ``table2``, ``fig3``, ``fig4`` and ``figS1``."""
    curve_grid = dict(n_values=_SWEEP_N, sigma_values=(0.5, 1.5), omega_values=(1.0, 4.0))
    table = {
        "table2": dict(n_values=(500, 100, 25), sigma_values=_SIGMAS, omega_values=_OMEGAS,
                       candidates=STUDY_CANDIDATES),
        "fig3": dict(curve_grid, candidates=((3, 0), (3, 2), (3, 1))),
        "fig4": dict(curve_grid, candidates=((2, 0), (2, 1), (3, 1), (4, 1), (4, 2))),
        "figS1": dict(curve_grid, candidates=((4, 0), (4, 3), (4, 1), (4, 2))),
    }
    if name not in table:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(table)}")
    return SimulationConfig(**{**table[name], "name": name, **overrides})


def cell_squared_errors(n, sigma, omega, seqs, replications, seed, cell=0,
                        common_random_numbers=True, amplitude=AMPLITUDE):
    """Replicate-level ``(sigma_hat^2 - sigma^2)^2``, shape ``(len(seqs), replications)``."""
    if replications < 1:
        raise ValueError("replications must be positive")
    seqs = list(seqs)
    for seq in seqs:
        if not isinstance(seq, DifferenceSequence):
            raise TypeError(f"expected DifferenceSequence, got {type(seq).__name__}")
        if n <= seq.r:
            raise InsufficientDataError(f"need n > r, got n={n} and r={seq.r}")
    mean = amplitude * np.sin(omega * np.pi * np.arange(1, n + 1) / n)
    out = np.empty((len(seqs), replications))
    chunk = max(1, CHUNK_ELEMENTS // n)
    for start in range(0, replications, chunk):
        count = min(chunk, replications - start)
        stop = start + count
        if common_random_numbers:
            y = mean + sigma * normal_block(seed, cell, 0, start, count, n)
            for i, seq in enumerate(seqs):
                out[i, start:stop] = (estimate_variance(y, seq) - sigma**2) ** 2
        else:
            for i, seq in enumerate(seqs):
                y = mean + sigma * normal_block(seed, cell, i + 1, start, count, n)
                out[i, start:stop] = (estimate_variance(y, seq) - sigma**2) ** 2
    return out


def scaled_rmse(squared_errors, n, sigma):
    """``(n / 2 sigma^4) * MSE`` and its Monte Carlo standard error."""
    se = np.asarray(squared_errors, dtype=float)
    scale = n / (2.0 * sigma**4)
    stderr = scale * se.std(ddof=1) / math.sqrt(se.size) if se.size > 1 else math.nan
    return float(scale * se.mean()), float(stderr)


def run_cell(n, sigma, omega, seq, replications, seed, cell=0):
    """Empirical RMSE of one estimator in one setting, with its standard error."""
    if replications < 1:
        raise ValueError("replications must be positive")
    se = cell_squared_errors(n, sigma, omega, [seq], replications, seed, cell)[0]
    return scaled_rmse(se, n, sigma)


@dataclass(frozen=True)
class CellRecord:
    n: int
    sigma: float
    omega: float
    r: int
    k: int
    rmse: float
    stderr: float
    best: bool


@dataclass(frozen=True)
class SimulationSummary:
    config: SimulationConfig
    records: tuple = field(repr=False)

    def cell_records(self):
        """Records grouped by ``(n, sigma, omega)`` in enumeration order."""
        groups = {}
        for rec in self.records:
            groups.setdefault((rec.n, rec.sigma, rec.omega), []).append(rec)
        return groups

    def winners(self):
        return [rec for rec in self.records if rec.best]

    def lookup(self, n, sigma, omega, r, k):
        for rec in self.records:
            if (rec.n, rec.sigma, rec.omega, rec.r, rec.k) == (n, sigma, omega, r, k):
                return rec
        raise KeyError((n, sigma, omega, r, k))


def _evaluate_cell(cfg, seqs, cell):
    index, n, sigma, omega = cell
    errors = cell_squared_errors(
        n, sigma, omega, seqs, cfg.replications, cfg.seed, index,
        cfg.common_random_numbers, cfg.amplitude,
    )
    stats = [scaled_rmse(e, n, sigma) for e in errors]
    # ties resolve to the earliest candidate
    best = int(np.argmin([s[0] for s in stats]))
    return [
        CellRecord(n, sigma, omega, seq.r, seq.k, rmse, stderr, i == best)
        for i, (seq, (rmse, stderr)) in enumerate(zip(seqs, stats))
    ]


def best_candidate_heatmap(cfg, jobs=1):
    """Evaluate every candidate on every cell and flag the per-cell minimum RMSE."""
    seqs = [generate(r, k) for r, k in cfg.candidates]
    cells = cfg.cells()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: _evaluate_cell(cfg, seqs, c), cells))
    else:
        results = [_evaluate_cell(cfg, seqs, c) for c in cells]
    return SimulationSummary(cfg, tuple(itertools.chain.from_iterable(results)))


@dataclass(frozen=True)
class CurvePoint:
    label: str
    r: int
    k: int
    sigma: float
    omega: float
    n: int
    log_rmse: float


def estimator_name(r, k):
    if r == 1:
        return "Rice"
    if k == 0:
        return f"opt({r})"
    if k == r - 1:
        return f"ord({r})"
    return f"d_{k}({r})"


def rmse_vs_n_curves(cfg, jobs=1, summary=None):
    """log(RMSE) against n for each candidate and each ``(sigma, omega)`` pair."""
    summary = best_candidate_heatmap(cfg, jobs) if summary is None else summary
    points = [
        CurvePoint(estimator_name(rec.r, rec.k), rec.r, rec.k, rec.sigma, rec.omega, rec.n,
                   math.log(rec.rmse))
        for rec in summary.records
    ]
    return sorted(points, key=lambda p: (p.sigma, p.omega, cfg.candidates.index((p.r, p.k)), p.n))


SUMMARY_COLUMNS = ("n", "sigma", "omega", "r", "k", "rmse", "stderr", "best")


def _csv_writer(handle):
    return csv.writer(handle, lineterminator="\n")


def write_outputs(summary, out_dir):
    """Write ``summary.csv``, ``winners.csv`` and ``config.json`` under ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in ("summary.csv", "winners.csv", "config.json")}
    rows = [
        [rec.n, repr(rec.sigma), repr(rec.omega), rec.r, rec.k, repr(rec.rmse), repr(rec.stderr),
         int(rec.best)]
        for rec in summary.records
    ]
    with open(paths["summary.csv"], "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        w.writerows(rows)
    with open(paths["winners.csv"], "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(("n", "sigma", "omega", "r", "k", "estimator", "rmse", "stderr"))
        for rec in summary.winners():
            w.writerow([rec.n, repr(rec.sigma), repr(rec.omega), rec.r, rec.k,
                        estimator_name(rec.r, rec.k), repr(rec.rmse), repr(rec.stderr)])
    with open(paths["config.json"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary.config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
