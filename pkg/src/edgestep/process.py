"""The preferential-attachment process with an edge-step function.

Degree-proportional sampling uses the endpoint list: every edge appends both
endpoints (a loop appends its vertex twice), so a uniform index into the list
picks a vertex with probability degree / 2t. No weights are ever updated.

Vertex ids are 0-based: vertex 0 is the initial vertex carrying one loop.
Randomness comes from numpy's PCG64; each step consumes exactly three
uniform doubles, whichever entry point advances the state.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import _kernels
from .edge_step import DomainError, EdgeStepSpec, evaluate_array
from .histogram import DegreeHistogram

CHUNK_STEPS = 1 << 18
INT32_LIMIT = 2**31 - 2


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class StepOutcome:
    step_type: str  # "vertex" or "edge"
    endpoints: tuple
    new_vertex: int | None = None


@dataclass(eq=False)
class GraphState:
    """An evolving multigraph G_t(f).

    ``endpoint_list``, ``degrees`` and ``birth_times`` are views trimmed to the
    live sizes; the backing arrays grow geometrically.
    """

    spec: EdgeStepSpec
    delta: float
    rng: np.random.Generator
    t: int
    vertex_count: int
    _endpoints: np.ndarray = field(repr=False)
    _degrees: np.ndarray = field(repr=False)
    _births: np.ndarray = field(repr=False)
    track_births: bool = False
    record_edges: bool = False
    edge_log: list = field(default_factory=list, repr=False)

    @property
    def endpoint_list(self) -> np.ndarray:
        return self._endpoints[: 2 * self.t]

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees[: self.vertex_count]

    @property
    def birth_times(self) -> np.ndarray:
        if not self.track_births:
            raise AttributeError("birth times are only kept with track_births=True")
        return self._births[: self.vertex_count]

    @property
    def id_dtype(self):
        return self._endpoints.dtype

    def reserve(self, steps: int, vertex_steps: int | None = None) -> None:
        """Make room for ``steps`` more steps, at most ``vertex_steps`` of them vertex-steps."""
        need_t = self.t + steps
        dtype = self._endpoints.dtype
        if need_t > INT32_LIMIT and dtype == np.int32:
            dtype = np.int64
        if 2 * need_t > self._endpoints.size or dtype != self._endpoints.dtype:
            size = max(2 * need_t, min(2 * self._endpoints.size, 2 * need_t + (1 << 24)))
            new = np.empty(size, dtype=dtype)
            new[: 2 * self.t] = self._endpoints[: 2 * self.t]
            self._endpoints = new
        need_v = self.vertex_count + (steps if vertex_steps is None else vertex_steps)
        if need_v > self._degrees.size:
            size = max(need_v, min(2 * self._degrees.size, need_v + (1 << 22)))
            new = np.zeros(size, dtype=self._degrees.dtype)
            new[: self.vertex_count] = self._degrees[: self.vertex_count]
            self._degrees = new
            if self.track_births:
                births = np.zeros(size, dtype=np.int64)
                births[: self.vertex_count] = self._births[: self.vertex_count]
                self._births = births


def new_initial(
    spec: EdgeStepSpec,
    delta: float = 0.0,
    seed=None,
    *,
    track_births: bool = False,
    wide_ids: bool = False,
    capacity: int = 16,
    record_edges: bool = False,
) -> GraphState:
    """G_1: one vertex with one loop, t = 1."""
    if not delta >= 0:
        raise DomainError(f"affine offset delta must be >= 0, got {delta!r}")
    dtype = np.int64 if wide_ids else np.int32
    capacity = max(int(capacity), 1)
    endpoints = np.empty(2 * capacity, dtype=dtype)
    endpoints[:2] = 0
    degrees = np.zeros(capacity, dtype=np.int64)
    degrees[0] = 2
    births = np.zeros(capacity if track_births else 0, dtype=np.int64)
    if track_births:
        births[0] = 1
    return GraphState(
        spec=spec,
        delta=float(delta),
        rng=make_rng(seed),
        t=1,
        vertex_count=1,
        _endpoints=endpoints,
        _degrees=degrees,
        _births=births,
        track_births=track_births,
        record_edges=record_edges,
    )


def state_from_endpoints(spec: EdgeStepSpec, endpoints, delta: float = 0.0, seed=None) -> GraphState:
    """A state with the given endpoint list (ids 0..V-1, every id present)."""
    endpoints = np.asarray(endpoints, dtype=np.int64)
    if endpoints.size < 2 or endpoints.size % 2:
        raise DomainError("endpoint list must have a positive even length")
    degrees = np.bincount(endpoints)
    if np.any(degrees == 0):
        raise DomainError("vertex ids must be contiguous from 0")
    state = new_initial(spec, delta, seed, capacity=endpoints.size // 2)
    state._endpoints[: endpoints.size] = endpoints
    state._degrees[: degrees.size] = degrees
    state.t = endpoints.size // 2
    state.vertex_count = degrees.size
    return state


def sample_preferential(state: GraphState, size: int | None = None):
    """Draw vertices with probability proportional to degree + delta.

    With delta = 0 this is a uniform endpoint-list entry. With delta > 0 it is
    a uniform endpoint with probability 2t / (2t + delta V), else a uniform
    vertex, which is exactly proportional to degree + delta.
    """
    x = state.rng.random(size)
    if size is None:
        return int(_kernels.pick_one(x, state._endpoints, state.t, state.vertex_count, state.delta))
    return _pick_many(state, x)


def _pick_many(state, x):
    two_t = 2 * state.t
    ends = state.endpoint_list
    if state.delta <= 0:
        idx = np.minimum((x * two_t).astype(np.int64), two_t - 1)
        return ends[idx].astype(np.int64)
    q = two_t / (two_t + state.delta * state.vertex_count)
    out = np.empty(x.size, dtype=np.int64)
    low = x < q
    idx = np.minimum((x[low] / q * two_t).astype(np.int64), two_t - 1)
    out[low] = ends[idx]
    v = np.minimum(((x[~low] - q) / (1.0 - q) * state.vertex_count).astype(np.int64), state.vertex_count - 1)
    out[~low] = v
    return out


def _run(state: GraphState, fvals: np.ndarray) -> None:
    n = fvals.size
    if n == 0:
        return
    state.reserve(n)
    uniforms = state.rng.random(3 * n)
    start_t = state.t
    state.t, state.vertex_count = _kernels.run_steps(
        state._endpoints, state._degrees, state._births, state.t, state.vertex_count,
        fvals, uniforms, state.delta, state.track_births,
    )
    if state.record_edges:
        ends = state._endpoints[2 * start_t: 2 * state.t]
        for i in range(n):
            a, b = int(ends[2 * i]), int(ends[2 * i + 1])
            state.edge_log.append((start_t + i + 1, a, b))


def advance(state: GraphState, force_vertex_step: bool | None = None) -> StepOutcome:
    """One step t -> t+1: vertex-step with probability f(t+1), else edge-step.

    ``force_vertex_step`` overrides the Bernoulli draw (the three uniforms are
    still consumed).
    """
    if force_vertex_step is None:
        fval = evaluate_array(state.spec, np.array([state.t + 1.0]))
    else:
        fval = np.array([1.0 if force_vertex_step else 0.0])
    v_before = state.vertex_count
    _run(state, fval)
    a, b = (int(x) for x in state._endpoints[2 * state.t - 2: 2 * state.t])
    if state.vertex_count > v_before:
        return StepOutcome("vertex", (a, b), new_vertex=v_before)
    return StepOutcome("edge", (a, b))


Observer = Callable[[GraphState], None]


def run_to(
    state: GraphState,
    t_target: int,
    observers: Iterable[tuple[int, Observer]] = (),
) -> GraphState:
    """Advance to ``t_target``, calling each observer right after its checkpoint time.

    Observers at times <= the current t fire immediately. Observers must not
    mutate the state.
    """
    t_target = int(t_target)
    if t_target < state.t:
        raise DomainError(f"t_target={t_target} is behind the current t={state.t}")
    pending = sorted(((int(t), i, cb) for i, (t, cb) in enumerate(observers)), key=lambda x: x[:2])
    for t_obs, _, _ in pending:
        if t_obs > t_target:
            raise DomainError(f"observer time {t_obs} beyond t_target={t_target}")
    # the endpoint list size is known; vertex arrays grow per chunk since V_t is usually far below t
    state.reserve(t_target - state.t, vertex_steps=0)
    k = 0
    while True:
        while k < len(pending) and pending[k][0] <= state.t:
            pending[k][2](state)
            k += 1
        if state.t >= t_target:
            break
        stop = pending[k][0] if k < len(pending) else t_target
        while state.t < stop:
            hi = min(stop, state.t + CHUNK_STEPS)
            fvals = evaluate_array(state.spec, np.arange(state.t + 1, hi + 1, dtype=float))
            _run(state, fvals)
    return state


def snapshot_histogram(state: GraphState) -> DegreeHistogram:
    return DegreeHistogram.from_degrees(state.t, state.degrees)


def run_batch(spec: EdgeStepSpec, t_target: int, replicas: int, seed=None, delta: float = 0.0) -> np.ndarray:
    """Many short independent runs from G_1 in one compiled loop.

    Returns a (replicas, t_target) matrix of final degrees, zero-padded past
    V_t. Uses a single stream split into consecutive per-replica blocks, so
    results differ from ``run_to`` with per-replica seeds.
    """
    if t_target < 1 or replicas < 1:
        raise DomainError("needs t_target >= 1 and replicas >= 1")
    if not delta >= 0:
        raise DomainError(f"affine offset delta must be >= 0, got {delta!r}")
    rng = make_rng(seed)
    steps = t_target - 1
    fvals = evaluate_array(spec, np.arange(2, t_target + 1, dtype=float))
    uniforms = rng.random(3 * steps * replicas)
    return _kernels.run_many(fvals, uniforms, replicas, t_target, float(delta))


def write_edge_list(state: GraphState, path) -> None:
    """CSV ``step,endpoint_a,endpoint_b,step_type`` for steps recorded with record_edges."""
    if not state.record_edges:
        raise DomainError("edge list export needs record_edges=True from the start")
    seen_vertices = 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "endpoint_a", "endpoint_b", "step_type"])
        for step, a, b in state.edge_log:
            kind = "vertex" if b == seen_vertices else "edge"
            if kind == "vertex":
                seen_vertices += 1
            w.writerow([step, a, b, kind])


def write_histogram_csv(hist: DegreeHistogram, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "count"])
        w.writerows(hist.to_csv_rows())
