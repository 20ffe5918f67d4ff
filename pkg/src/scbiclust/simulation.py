"""Simulation scenarios, accuracy scoring, split-half reproducibility and a bench driver.

Block coordinates are written as 1-based inclusive ranges, the way the
scenarios are usually described, and converted to 0-based half-open ranges
by :func:`from_one_based`; nothing else in the package uses 1-based indices.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Bicluster, BiclustError, DataMatrix, _as_array, rng_stream, standardize
from .mean_biclust import BiclustConfig, LayerSequence, fit_primary, fit_sequence
from .var_biclust import fit_variance_primary, fit_variance_sequence

__all__ = [
    "Block",
    "Scenario",
    "SCENARIOS",
    "Simulated",
    "AccuracyReport",
    "ReproReport",
    "BenchResult",
    "from_one_based",
    "generate",
    "score",
    "identify",
    "pipeline_config",
    "primary_fitter",
    "reproducibility",
    "bench",
    "CSV_COLUMNS",
]

JACCARD_MIN = 0.1
DATA_STREAM, FIT_STREAM = 1, 2


def from_one_based(first: int, last: int) -> tuple:
    """1-based inclusive ``first..last`` as a 0-based half-open ``(start, stop)``."""
    if first < 1 or last < first:
        raise ValueError(f"bad range {first}-{last}")
    return (first - 1, last)


@dataclass(frozen=True)
class Block:
    name: str
    rows: tuple  # 0-based half-open
    cols: tuple
    kind: str = "mean"

    @property
    def row_index(self) -> np.ndarray:
        return np.arange(*self.rows)

    @property
    def col_index(self) -> np.ndarray:
        return np.arange(*self.cols)

    @property
    def size(self) -> int:
        return (self.rows[1] - self.rows[0]) * (self.cols[1] - self.cols[0])

    def mask(self, n: int, p: int) -> np.ndarray:
        M = np.zeros((n, p), dtype=bool)
        M[slice(*self.rows), slice(*self.cols)] = True
        return M

    def to_dict(self) -> dict:
        return {"name": self.name, "rows": list(self.rows), "cols": list(self.cols), "kind": self.kind}


@dataclass(frozen=True)
class Scenario:
    id: int
    n: int
    p: int
    blocks: tuple
    primary: str
    pipeline: str  # "mean", "hier" or "variance"
    sequential: bool = False  # layer k is scored against the k-th block

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        if name == "bic1+2":
            b1, b2 = self.blocks[0], self.blocks[1]
            return Block("bic1+2", (min(b1.rows[0], b2.rows[0]), max(b1.rows[1], b2.rows[1])),
                         (min(b1.cols[0], b2.cols[0]), max(b1.cols[1], b2.cols[1])), b1.kind)
        raise KeyError(name)

    @property
    def labels(self) -> list:
        names = [b.name for b in self.blocks]
        if len(self.blocks) >= 2:
            names.append("bic1+2")
        return names

    def target_for_layer(self, k: int) -> str:
        """Name of the block layer ``k`` (1-based) is scored against."""
        if self.sequential and k <= len(self.blocks):
            return self.blocks[k - 1].name
        return self.primary


def _blk(name, r, c, kind="mean"):
    return Block(name, from_one_based(*r), from_one_based(*c), kind)


SCENARIOS = {
    1: Scenario(1, 100, 200, (
        _blk("bic1", (1, 20), (1, 20)),
        _blk("bic2", (16, 30), (51, 80)),
        _blk("bic3", (51, 90), (61, 130)),
        _blk("bic4", (66, 100), (151, 200)),
    ), "bic3", "mean"),
    2: Scenario(2, 100, 200, (
        _blk("bic1", (1, 20), (1, 20)),
        _blk("bic2", (16, 30), (51, 80)),
        _blk("bic3", (51, 90), (71, 110)),
        _blk("bic4", (71, 100), (156, 200)),
    ), "bic3", "mean"),
    3: Scenario(3, 100, 200, (
        _blk("bic1", (1, 40), (1, 40)),
        _blk("bic2", (21, 60), (21, 60)),
    ), "bic1", "mean", sequential=True),
    4: Scenario(4, 1200, 75, (
        _blk("bic1", (1, 500), (1, 50)),
    ), "bic1", "hier"),
    5: Scenario(5, 150, 500, (
        _blk("bic1", (1, 30), (1, 200), "variance"),
        _blk("bic2", (31, 50), (201, 400), "variance"),
    ), "bic1", "variance", sequential=True),
}

# additive block means for the normal and Cauchy scenarios
_S1_SHIFT = {"bic1": 2.0, "bic2": 3.0, "bic3": 3.0, "bic4": 2.0}
_S2_SHIFT = {"bic1": 75.0, "bic2": 50.0, "bic3": 200.0, "bic4": 75.0}


@dataclass
class Simulated:
    data: DataMatrix
    scenario: Scenario

    def truth_dict(self) -> dict:
        s = self.scenario
        return {"scenario": s.id, "n": s.n, "p": s.p, "primary": s.primary,
                "biclusters": [b.to_dict() for b in s.blocks]}


def _sim1(rng, s):
    X = rng.standard_normal((s.n, s.p))
    for b in s.blocks:
        r, c = slice(*b.rows), slice(*b.cols)
        X[r, c] += rng.normal(_S1_SHIFT[b.name], 1.0, X[r, c].shape)
    return X


def _sim2(rng, s):
    X = rng.standard_cauchy((s.n, s.p))
    for b in s.blocks:
        r, c = slice(*b.rows), slice(*b.cols)
        X[r, c] += _S2_SHIFT[b.name] + rng.standard_cauchy(X[r, c].shape)
    return X


def _sim3(rng, s):
    layers = []
    for b, (mu, sd) in zip(s.blocks, ((7.0, 2.0), (-5.0, 3.0))):
        L = rng.normal(0.0, 0.5, (s.n, s.p))
        r, c = slice(*b.rows), slice(*b.cols)
        L[r, c] = rng.normal(mu, sd, L[r, c].shape)
        layers.append(L)
    return layers[0] + layers[1]


def _sim4(rng, s):
    n = s.n
    theta = rng.uniform(0.0, math.pi, n)
    eps = rng.normal(0.0, 0.2, n)
    first = np.arange(n) < 500
    phase = theta + math.pi * (~first)
    even = -2.0 * first + 5.0 * np.sin(phase) + eps  # 1-based column 2j
    odd = 5.0 * first + 5.0 * np.cos(phase) + eps  # 1-based column 2j-1
    X = np.empty((n, s.p))
    X[:, 0:50:2] = odd[:, None]
    X[:, 1:50:2] = even[:, None]
    X[:, 50:] = rng.standard_normal((n, s.p - 50))
    return X


def _sim5(rng, s):
    X = rng.normal(1.0, 2.0, (s.n, s.p))
    for b, sd in zip(s.blocks, (15.0, 5.0)):
        r, c = slice(*b.rows), slice(*b.cols)
        X[r, c] = rng.normal(1.0, sd, X[r, c].shape)
    return X


_GENERATORS = {1: _sim1, 2: _sim2, 3: _sim3, 4: _sim4, 5: _sim5}


def generate(scenario_id: int, rng: np.random.Generator) -> Simulated:
    """Draw one data set of the given scenario (unstandardized)."""
    if scenario_id not in SCENARIOS:
        raise KeyError(f"unknown scenario {scenario_id}; choose 1-5")
    s = SCENARIOS[scenario_id]
    return Simulated(DataMatrix(_GENERATORS[scenario_id](rng, s)), s)


@dataclass(frozen=True)
class AccuracyReport:
    obs_misclass: float
    feature_fnr: float
    feature_fpr: float
    entry_fnr: float
    entry_fpr: float
    identification: str
    valid: bool
    target: str = ""


def _overlap(rows, cols, b: Block) -> int:
    r = np.count_nonzero((rows >= b.rows[0]) & (rows < b.rows[1]))
    c = np.count_nonzero((cols >= b.cols[0]) & (cols < b.cols[1]))
    return int(r * c)


def identify(U: Bicluster, scenario: Scenario, threshold: float = JACCARD_MIN) -> str:
    """Truth label with the largest entry-set Jaccard index, or ``none``.

    Candidates are the planted blocks plus ``bic1+2``, the smallest
    rectangle covering the first two.  Ties go to the earlier candidate.
    """
    area = U.rows.size * U.cols.size
    best, best_j = "none", -1.0
    for name in scenario.labels:
        b = scenario.block(name)
        inter = _overlap(U.rows, U.cols, b)
        j = inter / (area + b.size - inter)
        if j > best_j:
            best, best_j = name, j
    return best if best_j >= threshold else "none"


def score(U: Bicluster, scenario: Scenario, target: Optional[str] = None,
          threshold: float = JACCARD_MIN) -> AccuracyReport:
    """Compare one found bicluster with a planted block (default: the primary one)."""
    s = scenario
    b = s.block(target or s.primary)
    rows, cols = np.asarray(U.rows), np.asarray(U.cols)
    t_rows, t_cols = b.row_index, b.col_index
    obs = np.setxor1d(rows, t_rows).size / s.n
    f_fn = np.setdiff1d(t_cols, cols).size / t_cols.size
    f_fp = np.setdiff1d(cols, t_cols).size / max(1, s.p - t_cols.size)
    inter = _overlap(rows, cols, b)
    e_fn = (b.size - inter) / b.size
    e_fp = (rows.size * cols.size - inter) / max(1, s.n * s.p - b.size)
    return AccuracyReport(obs, f_fn, f_fp, e_fn, e_fp, identify(U, s, threshold),
                          bool(rows.size >= 2 and cols.size >= 2), b.name)


def pipeline_config(scenario: Scenario, **overrides) -> BiclustConfig:
    """Configuration of the pipeline matched to a scenario."""
    base = {"mean": BiclustConfig(), "hier": BiclustConfig(base="hierarchical"),
            "variance": BiclustConfig(null_method="chisq")}[scenario.pipeline]
    return replace(base, **overrides)


def _fit_seq(A, scenario, cfg, rng) -> LayerSequence:
    if scenario.pipeline == "variance":
        return fit_variance_sequence(A, cfg, rng)
    return fit_sequence(A, cfg, rng)


def primary_fitter(kind: str, cfg: BiclustConfig) -> Callable:
    """``fit(X, rng) -> Bicluster | None`` that standardizes and fits one layer."""
    one = fit_variance_primary if kind == "variance" else fit_primary

    def fit(X, rng):
        Z, keep = standardize(X, drop_constant=True)
        U = one(Z, cfg, rng)
        if U is None or keep.size == _as_array(X).shape[1]:
            return U
        return replace(U, cols=keep[U.cols])
    return fit


@dataclass
class ReproReport:
    obs_misclass: float
    feature_fnr: float
    feature_fpr: float
    feature_misclass: float
    splits: int
    failed_fits: int
    per_split: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _half_rates(U, Uh, H, n_half):
    """(obs misclass, feature FNR, feature FPR) of one half's fit."""
    if Uh is None:
        return 1.0, 1.0, 1.0
    ref_rows = np.intersect1d(U.rows, H)
    got_rows = H[Uh.rows]
    obs = np.setxor1d(ref_rows, got_rows).size / n_half
    fnr = np.setdiff1d(U.cols, Uh.cols).size / U.cols.size
    fpr = np.setdiff1d(Uh.cols, U.cols).size / Uh.cols.size
    return obs, fnr, fpr


def reproducibility(X, fit: Callable, splits: int = 10,
                    rng: Optional[np.random.Generator] = None) -> ReproReport:
    """Split-half stability of one bicluster.

    ``fit(X, rng)`` is run on the full matrix (the reference ``U``) and on
    both halves of ``splits`` random row halvings.  A half whose fit
    returns ``None`` scores 1.0 on every rate.
    """
    A = _as_array(X)
    n, p = A.shape
    if n < 8:
        raise ValueError("reproducibility needs at least 8 observations")
    rng = np.random.default_rng() if rng is None else rng
    U = fit(DataMatrix(A), rng)
    failed = int(U is None)
    per = []
    for _ in range(splits):
        perm = rng.permutation(n)
        halves = [np.sort(perm[: n // 2]), np.sort(perm[n // 2:])]
        fits = []
        for H in halves:
            try:
                fits.append(fit(DataMatrix(A[H]), rng))
            except BiclustError:
                fits.append(None)
        failed += sum(f is None for f in fits)
        if U is None:
            per.append({"obs_misclass": 1.0, "feature_fnr": 1.0, "feature_fpr": 1.0,
                        "feature_misclass": 1.0})
            continue
        rates = np.array([_half_rates(U, Uh, H, H.size) for Uh, H in zip(fits, halves)])
        if fits[0] is None or fits[1] is None:
            fmis = 1.0
        else:
            fmis = np.setxor1d(fits[0].cols, fits[1].cols).size / p
        o, fn, fp = rates.mean(axis=0)
        per.append({"obs_misclass": float(o), "feature_fnr": float(fn),
                    "feature_fpr": float(fp), "feature_misclass": float(fmis)})
    avg = {k: float(np.mean([d[k] for d in per])) for k in per[0]}
    return ReproReport(avg["obs_misclass"], avg["feature_fnr"], avg["feature_fpr"],
                       avg["feature_misclass"], splits, failed, per)


CSV_COLUMNS = ("id", "layer", "n_rows", "n_cols", "ks_stat", "ks_p", "obs_misclass", "feat_fnr",
               "feat_fpr", "entry_fnr", "entry_fpr", "identification", "valid", "wall_ms")


@dataclass
class BenchResult:
    rows: list  # one dict per (scenario, replicate, layer); zero-layer fits give a layer-0 row
    layer_counts: dict  # scenario id -> list of layer counts, one per replicate
    config: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=("replicate",) + CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in ("replicate",) + CSV_COLUMNS})
        return buf.getvalue()

    def summary(self) -> list:
        """One dict per scenario with layer-1 means, validity and stopping counts."""
        out = []
        for sid, counts in sorted(self.layer_counts.items()):
            reps = len(counts)
            by_layer = {}
            for r in self.rows:
                if r["id"] == sid and r["layer"] > 0:
                    by_layer.setdefault(r["layer"], []).append(r)
            first = by_layer.get(1, [])
            valid = [r for r in first if r["valid"]]
            s = SCENARIOS[sid]
            row = {"id": sid, "replicates": reps, "valid": len(valid)}
            for k in ("obs_misclass", "feat_fnr", "feat_fpr", "entry_fnr", "entry_fpr"):
                row[k] = float(np.mean([r[k] for r in valid])) if valid else float("nan")
            for k in (1, 2):
                want = s.target_for_layer(k) if s.sequential else s.primary
                hits = sum(r["identification"] == want for r in by_layer.get(k, []))
                row[f"layer{k}_ident"] = hits / reps
            hist = np.bincount(counts)
            row["layer_hist"] = {int(k): int(v) for k, v in enumerate(hist) if v}
            row["stop_at_2"] = float(np.mean(np.asarray(counts) == 2))
            row["wall_ms"] = float(np.mean([r["wall_ms"] for r in self.rows if r["id"] == sid]))
            out.append(row)
        return out

    def summary_table(self) -> str:
        head = ("id", "reps", "valid", "obs_mis", "f_fnr", "f_fpr", "e_fnr", "e_fpr",
                "L1_id", "L2_id", "stop@2", "layers", "ms/fit")
        lines = ["  ".join(f"{h:>8}" for h in head)]
        for r in self.summary():
            hist = ",".join(f"{k}:{v}" for k, v in r["layer_hist"].items())
            vals = (r["id"], r["replicates"], r["valid"], r["obs_misclass"], r["feat_fnr"],
                    r["feat_fpr"], r["entry_fnr"], r["entry_fpr"], r["layer1_ident"],
                    r["layer2_ident"], r["stop_at_2"])
            cells = [f"{v:>8}" if isinstance(v, int) else f"{v:>8.4f}" for v in vals]
            cells += [f"{hist:>8}", f"{r['wall_ms']:>8.0f}"]
            lines.append("  ".join(cells))
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def _run_replicate(job):
    sid, r, seed, overrides = job
    sim = generate(sid, rng_stream(seed, DATA_STREAM, sid, r))
    s = sim.scenario
    cfg = pipeline_config(s, **overrides)
    t0 = time.perf_counter()
    seq = _fit_seq(standardize(sim.data), s, cfg, rng_stream(seed, FIT_STREAM, sid, r))
    ms = (time.perf_counter() - t0) * 1e3
    rows = []
    for k, U in enumerate(seq.layers, start=1):
        a = score(U, s, s.target_for_layer(k))
        rows.append({"replicate": r, "id": sid, "layer": k, "n_rows": int(U.rows.size),
                     "n_cols": int(U.cols.size), "ks_stat": U.ks_statistic, "ks_p": U.ks_p_value,
                     "obs_misclass": a.obs_misclass, "feat_fnr": a.feature_fnr,
                     "feat_fpr": a.feature_fpr, "entry_fnr": a.entry_fnr,
                     "entry_fpr": a.entry_fpr, "identification": a.identification,
                     "valid": a.valid, "wall_ms": ms})
    if not rows:
        nan = float("nan")
        rows.append({"replicate": r, "id": sid, "layer": 0, "n_rows": 0, "n_cols": 0,
                     "ks_stat": nan, "ks_p": nan, "obs_misclass": nan, "feat_fnr": nan,
                     "feat_fpr": nan, "entry_fnr": nan, "entry_fpr": nan,
                     "identification": "none", "valid": False, "wall_ms": ms})
    return sid, r, len(seq.layers), rows


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SCB_THREADS", "1")))
    except ValueError:
        return 1


def bench(scenario_ids: Sequence[int], replicates: int = 20, seed: int = 0,
          threads: Optional[int] = None, **overrides) -> BenchResult:
    """Run each scenario's matched pipeline on ``replicates`` fresh data sets.

    Replicate ``r`` of scenario ``k`` draws its data from stream
    ``(seed, DATA_STREAM, k, r)`` and fits with ``(seed, FIT_STREAM, k, r)``, so
    results do not depend on ``threads``.  ``overrides`` go to the
    :class:`BiclustConfig` of every scenario (e.g. ``max_layers``).
    """
    for sid in scenario_ids:
        if sid not in SCENARIOS:
            raise KeyError(f"unknown scenario {sid}; choose 1-5")
    threads = default_threads() if threads is None else max(1, int(threads))
    jobs = [(sid, r, seed, overrides) for sid in scenario_ids for r in range(replicates)]
    if threads == 1:
        results = [_run_replicate(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_run_replicate, jobs))
    rows, counts = [], {sid: [0] * replicates for sid in scenario_ids}
    for sid, r, nl, rr in results:
        rows.extend(rr)
        counts[sid][r] = nl
    return BenchResult(rows, counts, {"seed": seed, "replicates": replicates,
                                      "scenarios": list(scenario_ids), **overrides})
