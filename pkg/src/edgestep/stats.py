"""Replica ensembles, empirical estimators and comparison against the exact recursion."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .edge_step import DomainError, EdgeStepSpec, evaluate, format_spec
from .histogram import DegreeHistogram
from .process import new_initial, run_to, snapshot_histogram
from .theory import ExpectationTable, expected_ratio, halfwidth_from_F, p_gamma

GATE_Z = 4.0
GATE_DEGREES = 10
GATE_MAX_FAILURES = 1


class ReplicaError(RuntimeError):
    def __init__(self, replica: int, cause: BaseException):
        super().__init__(f"replica {replica} failed: {cause!r}")
        self.replica = replica
        self.cause = cause


def empirical_distribution(hist: DegreeHistogram, d: int) -> float:
    """P-hat_t(d) = N_t(d) / V_t."""
    return hist.count(d) / hist.vertex_count


def count_at_most(hist: DegreeHistogram, d: int) -> int:
    """N_t(<= d)."""
    if d < 1:
        return 0
    total = int(hist.dense[: min(d, len(hist.dense) - 1) + 1].sum())
    total += sum(c for k, c in hist.sparse.items() if k <= d)
    return total


def replica_seed(base_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for replica ``index`` (PCG64 SeedSequence spawn key)."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("EDGESTEP_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class ReplicaEnsemble:
    """Histograms per replica per checkpoint: ``histograms[r][t]``.

    With ``track_births`` each replica also keeps ``(degrees, birth_times)``
    snapshots per checkpoint in ``vertex_snapshots[r][t]``.
    """

    spec: EdgeStepSpec
    delta: float
    seeds: list
    checkpoints: list
    histograms: list
    base_seed: int = 0
    vertex_snapshots: list | None = None

    @property
    def replicas(self) -> int:
        return len(self.seeds)

    def at(self, t: int) -> list:
        if t not in self.checkpoints:
            raise KeyError(f"checkpoint t={t} not in ensemble")
        return [h[t] for h in self.histograms]


def _one_replica(spec, delta, seed, checkpoints, track_births):
    state = new_initial(spec, delta, seed, track_births=track_births, capacity=checkpoints[-1])
    hists, snaps = {}, {}

    def observe(s):
        hists[s.t] = snapshot_histogram(s)
        if track_births:
            snaps[s.t] = (s.degrees.copy(), s.birth_times.copy())

    run_to(state, checkpoints[-1], [(t, observe) for t in checkpoints])
    return hists, snaps


def run_ensemble(
    spec: EdgeStepSpec,
    delta: float,
    t_checkpoints: Sequence[int],
    replicas: int,
    base_seed: int,
    *,
    threads: int | None = None,
    track_births: bool = False,
) -> ReplicaEnsemble:
    """Independent replicas with seeds derived from (base_seed, index).

    Replicas run on a thread pool (the compiled step loop releases the GIL);
    results are collected in replica order, so output does not depend on
    ``threads``.
    """
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas}")
    checkpoints = sorted(set(int(t) for t in t_checkpoints))
    if not checkpoints or checkpoints[0] < 1:
        raise DomainError("checkpoints must be >= 1")
    seeds = [replica_seed(base_seed, r) for r in range(replicas)]
    if len(set(seeds)) != len(seeds):
        raise RuntimeError("derived replica seeds collided")
    threads = default_threads() if threads is None else max(1, int(threads))

    def job(r):
        try:
            return _one_replica(spec, delta, seeds[r], checkpoints, track_births)
        except (MemoryError, OSError) as exc:
            raise ReplicaError(r, exc) from exc

    if threads == 1:
        results = [job(r) for r in range(replicas)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, range(replicas)))
    return ReplicaEnsemble(
        spec=spec,
        delta=float(delta),
        seeds=seeds,
        checkpoints=checkpoints,
        histograms=[h for h, _ in results],
        base_seed=int(base_seed),
        vertex_snapshots=[s for _, s in results] if track_births else None,
    )


# ---------------------------------------------------------------------------
# comparison


@dataclass
class ComparisonRow:
    t: int
    d: int
    emp_mean: float  # mean of P-hat_t(d) over replicas
    emp_se: float
    oracle: float  # E N_t(d) / F(t)
    limit_p: float | None
    halfwidth: float | None
    condition_ok: bool | None
    band_pass: bool | None
    z_score: float
    count_mean: float
    count_se: float
    expected_count: float


@dataclass
class ComparisonReport:
    spec: EdgeStepSpec
    replicas: int
    A: float
    alpha: float
    rows: list = field(default_factory=list)
    bands_omitted: bool = False
    gate: dict = field(default_factory=dict)  # t -> number of |z| > 4 cells among d <= 10

    @property
    def gate_pass(self) -> bool:
        return all(n <= GATE_MAX_FAILURES for n in self.gate.values())

    def cell(self, t: int, d: int) -> ComparisonRow:
        for row in self.rows:
            if row.t == t and row.d == d:
                return row
        raise KeyError((t, d))

    def to_csv(self, path) -> None:
        cols = ["t", "d", "emp_mean", "emp_se", "oracle", "limit_p", "halfwidth", "band_pass", "z_score"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.rows:
                w.writerow([_fmt(getattr(row, c)) for c in cols])

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for row in self.rows:
                rec = {"spec": format_spec(self.spec), "replicas": self.replicas, "A": self.A}
                rec.update(asdict(row))
                fh.write(json.dumps(rec, allow_nan=True) + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(x))
    if x.size < 2:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / math.sqrt(x.size))


def _z(diff: float, se: float) -> float:
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)


def compare_to_theory(
    ensemble: ReplicaEnsemble,
    table: ExpectationTable,
    A: float,
    alpha: float,
    d_report: int = 20,
) -> ComparisonReport:
    """Per (t, d <= d_report) comparison of replica means with the exact recursion.

    The gate counts cells d <= 10 with |z| > 4 (z of the mean count against
    E N_t(d)) and allows at most one per checkpoint. The concentration band
    is reported but is not part of the gate; it is omitted for gamma >= 1.
    """
    missing = [t for t in ensemble.checkpoints if t not in table.rows]
    if missing:
        raise KeyError(f"expectation table lacks checkpoints {missing}")
    if d_report > table.d_max:
        raise DomainError(f"d_report={d_report} exceeds table d_max={table.d_max}")
    gamma = ensemble.spec.gamma
    bands = gamma < 1.0
    report = ComparisonReport(
        spec=ensemble.spec, replicas=ensemble.replicas, A=A, alpha=alpha, bands_omitted=not bands
    )
    for t in ensemble.checkpoints:
        hists = ensemble.at(t)
        V = np.array([h.vertex_count for h in hists], dtype=float)
        F_t = table.F[t]
        failures = 0
        for d in range(1, d_report + 1):
            N = np.array([h.count(d) for h in hists], dtype=float)
            count_mean, count_se = _mean_se(N)
            emp_mean, emp_se = _mean_se(N / V)
            expected = table.expected_count(t, d)
            oracle = expected_ratio(table, t, d)
            z = _z(count_mean - expected, count_se)
            if d <= GATE_DEGREES and abs(z) > GATE_Z:
                failures += 1
            limit = halfwidth = condition_ok = band_pass = None
            if bands:
                limit = p_gamma(gamma, d)
                if t >= 2:
                    hw = halfwidth_from_F(F_t, gamma, t, d, A)
                    halfwidth, condition_ok = hw.halfwidth, hw.condition_ok
                    band_pass = abs(emp_mean - oracle) <= halfwidth
            report.rows.append(
                ComparisonRow(
                    t=t, d=d, emp_mean=emp_mean, emp_se=emp_se, oracle=oracle,
                    limit_p=limit, halfwidth=halfwidth, condition_ok=condition_ok,
                    band_pass=band_pass, z_score=z, count_mean=count_mean,
                    count_se=count_se, expected_count=expected,
                )
            )
        report.gate[t] = failures
    return report


# ---------------------------------------------------------------------------
# estimators


def fit_tail_exponent(values: Mapping[int, float], d_min: float, d_max: float) -> tuple[float, float]:
    """OLS slope of log(value) on log(d) over d_min <= d <= d_max, with its standard error."""
    pts = [(d, v) for d, v in values.items() if d_min <= d <= d_max and v > 0]
    if len(pts) < 5:
        raise ValueError(f"need at least 5 positive points in [{d_min}, {d_max}], got {len(pts)}")
    pts.sort()
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    fit = sps.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def early_vertex_small_degree_rate(
    ensemble: ReplicaEnsemble, t: int, delta_exp: float, d: int
) -> float:
    """Fraction of vertices born by step t^(1-delta_exp) with degree <= d at time t, averaged over replicas."""
    if ensemble.vertex_snapshots is None:
        raise DomainError("ensemble was run without track_births")
    if not 0 < delta_exp < 1:
        raise DomainError(f"delta_exp must lie in (0, 1), got {delta_exp!r}")
    cutoff = t ** (1.0 - delta_exp)
    rates = []
    for snaps in ensemble.vertex_snapshots:
        if t not in snaps:
            raise KeyError(f"checkpoint t={t} not in ensemble")
        degrees, births = snaps[t]
        early = births <= cutoff
        rates.append(float(np.mean(degrees[early] <= d)))
    return float(np.mean(rates))


@dataclass
class MaxDegreeTrace:
    checkpoints: list
    max_degree: np.ndarray  # (replicas, checkpoints)
    first_vertex_degree: np.ndarray
    first_over_t: np.ndarray
    first_over_tf: np.ndarray

    def mean(self, name: str) -> np.ndarray:
        return getattr(self, name).mean(axis=0)


def max_degree_trace(ensemble: ReplicaEnsemble) -> MaxDegreeTrace:
    """Max degree and D_t(v_1) per replica and checkpoint, with D_t(v_1)/t and D_t(v_1)/(t f(t))."""
    cps = ensemble.checkpoints
    maxd = np.array([[h[t].max_degree for t in cps] for h in ensemble.histograms], dtype=np.int64)
    first = np.array([[h[t].first_vertex_degree for t in cps] for h in ensemble.histograms], dtype=np.int64)
    ts = np.array(cps, dtype=float)
    ft = np.array([evaluate(ensemble.spec, t) for t in cps])
    return MaxDegreeTrace(
        checkpoints=list(cps),
        max_degree=maxd,
        first_vertex_degree=first,
        first_over_t=first / ts,
        first_over_tf=first / (ts * ft),
    )
