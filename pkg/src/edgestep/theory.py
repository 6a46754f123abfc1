"""Deterministic ground truth: the limit law p_gamma, the exact E N_t(d)
recursion, and the concentration bound formulas."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .edge_step import (
    DomainError,
    EdgeStepSpec,
    UnsupportedRegimeError,
    err_term,
    evaluate_array,
    expected_vertices,
    expected_vertices_array,
)

TRUNCATION_WARN_FRACTION = 1e-6


def _check_gamma(gamma):
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"gamma must lie in [0, 1), got {gamma!r}")


def p_gamma(gamma: float, d):
    """(1-gamma) Gamma(2-gamma) Gamma(d) / Gamma(d+2-gamma), via log-Gamma.

    Accepts a scalar or an array of degrees d >= 1.
    """
    _check_gamma(gamma)
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 1):
        raise DomainError("degrees start at 1")
    log_p = math.log1p(-gamma) + gammaln(2.0 - gamma) + gammaln(d_arr) - gammaln(d_arr + 2.0 - gamma)
    out = np.exp(log_p)
    return float(out) if out.ndim == 0 else out


def p_gamma_recursive(gamma: float, d: int) -> float:
    """Same law from p(1) = (1-gamma)/(2-gamma), p(d) = (d-1)/(d+1-gamma) p(d-1)."""
    _check_gamma(gamma)
    if d < 1:
        raise DomainError("degrees start at 1")
    p = (1.0 - gamma) / (2.0 - gamma)
    for k in range(2, int(d) + 1):
        p *= (k - 1) / (k + 1 - gamma)
    return p


def p_gamma_tail(gamma: float, d: int) -> float:
    """sum_{k > d} p_gamma(k) = Gamma(2-gamma) Gamma(d+1) / Gamma(d+2-gamma).

    Telescoping gives total mass exactly 1 for every gamma in [0, 1); the tail
    decays only like d^-(1-gamma).
    """
    _check_gamma(gamma)
    return math.exp(gammaln(2.0 - gamma) + gammaln(d + 1.0) - gammaln(d + 2.0 - gamma))


# ---------------------------------------------------------------------------
# exact expectations


@dataclass
class ExpectationTable:
    """E N_t(d) for 1 <= d <= d_max at each checkpoint.

    ``rows[t][d]`` is E N_t(d) (index 0 unused). Values are exact for every
    stored d even when the support is truncated, because the recursion only
    moves mass upward.
    """

    spec: EdgeStepSpec
    t_max: int
    d_max: int
    rows: dict = field(default_factory=dict)
    F: dict = field(default_factory=dict)
    truncated_mass: dict = field(default_factory=dict)
    truncation_warning: bool = False

    @property
    def checkpoints(self) -> list:
        return sorted(self.rows)

    def expected_count(self, t: int, d: int) -> float:
        if t not in self.rows:
            raise KeyError(f"checkpoint t={t} not in table")
        if d < 1:
            return 0.0
        if d > self.d_max:
            raise KeyError(f"degree d={d} beyond table d_max={self.d_max}")
        return float(self.rows[t][d])

    def to_csv(self, path) -> None:
        """Columns ``t,d,expected_count,F_t,ratio``; structural zeros are omitted."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "d", "expected_count", "F_t", "ratio"])
            for t in self.checkpoints:
                row, F = self.rows[t], self.F[t]
                for d in np.flatnonzero(row):
                    if d == 0:
                        continue
                    v = float(row[d])
                    w.writerow([t, int(d), repr(v), repr(F), repr(v / F)])


def read_expectation_csv(path, spec: EdgeStepSpec, d_max: int | None = None) -> ExpectationTable:
    """Inverse of :meth:`ExpectationTable.to_csv`. Malformed files raise ValueError."""
    entries, F = {}, {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "d", "expected_count", "F_t", "ratio"]:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields")
            try:
                t, d = int(rec[0]), int(rec[1])
                value, f_t = float(rec[2]), float(rec[3])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed number") from None
            if t < 1 or d < 1 or not value >= 0 or not f_t >= 1:
                raise ValueError(f"{path}:{lineno}: value out of range")
            entries[(t, d)] = value
            if F.setdefault(t, f_t) != f_t:
                raise ValueError(f"{path}:{lineno}: inconsistent F_t for t={t}")
    if not entries:
        raise ValueError(f"{path}: no rows")
    top = max(d for _, d in entries)
    d_max = top if d_max is None else max(d_max, top)
    table = ExpectationTable(spec=spec, t_max=max(F), d_max=d_max)
    for t in sorted(F):
        table.rows[t] = np.zeros(d_max + 1)
        table.F[t] = F[t]
    for (t, d), v in entries.items():
        table.rows[t][d] = v
    for t in table.rows:
        table.truncated_mass[t] = max(0.0, F[t] - float(table.rows[t].sum()))
    return table


def default_d_max(t_max: int) -> int:
    """Full support 2 t_max while that stays cheap; a truncated 4096 beyond."""
    return 2 * t_max if t_max <= 20_000 else 4096


def evolve_expectations(
    spec: EdgeStepSpec, checkpoints: Sequence[int], d_max: int | None = None
) -> ExpectationTable:
    """Iterate the exact recursion for E N_t(d) from G_1 (E N_1(2) = 1).

    Only the rolling row and the checkpoint rows are kept. Truncated mass is
    tracked as F(t) minus the retained mass; a warning flag is set when it
    exceeds 1e-6 F(t).
    """
    cps = sorted(set(int(c) for c in checkpoints))
    if not cps:
        raise DomainError("need at least one checkpoint")
    if cps[0] < 1:
        raise DomainError(f"checkpoints must be >= 1, got {cps[0]}")
    t_max = cps[-1]
    if d_max is None:
        d_max = default_d_max(t_max)
    if d_max < 2:
        raise DomainError(f"d_max must be >= 2, got {d_max}")
    fvals = np.zeros(t_max + 2)
    fvals[1:] = evaluate_array(spec, np.arange(1, t_max + 2, dtype=float))
    F = expected_vertices_array(spec, t_max)
    a = np.zeros(d_max + 1)
    a[2] = 1.0
    table = ExpectationTable(spec=spec, t_max=t_max, d_max=d_max)
    t = 1
    for c in cps:
        _kernels.evolve_expectations(a, fvals, t, c)
        t = c
        table.rows[c] = a.copy()
        table.F[c] = float(F[c])
        lost = max(0.0, float(F[c]) - float(a.sum()))
        table.truncated_mass[c] = lost
        if lost > TRUNCATION_WARN_FRACTION * F[c]:
            table.truncation_warning = True
    return table


def expected_ratio(table: ExpectationTable, t: int, d: int) -> float:
    """E N_t(d) / F(t)."""
    return table.expected_count(t, d) / table.F[t]


def expected_first_vertex_degree(spec: EdgeStepSpec, t: int) -> float:
    """E D_t(v_1) from E D_{s+1} = (1 + 1/s - f(s+1)/(2s)) E D_s, D_1 = 2."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    s = np.arange(1, t, dtype=float)
    f_next = evaluate_array(spec, s + 1.0) if t > 1 else np.empty(0)
    return float(2.0 * np.exp(np.sum(np.log1p(1.0 / s - f_next / (2.0 * s)))))


# ---------------------------------------------------------------------------
# concentration bounds


class Halfwidth(NamedTuple):
    halfwidth: float
    condition_ok: bool
    failure_prob: float


def halfwidth_from_F(F_t: float, gamma: float, t: int, d: int, A: float) -> Halfwidth:
    if gamma >= 1.0:
        raise UnsupportedRegimeError(f"band needs gamma in [0, 1), got {gamma}")
    if not A > 0:
        raise DomainError(f"A must be positive, got {A!r}")
    if t < 2 or d < 1:
        raise DomainError("needs t >= 2 and d >= 1")
    scale = (1.0 - gamma) * F_t
    half = 10.0 * d * A / math.sqrt(scale)
    ok = A < math.sqrt(F_t / (1.0 - gamma)) / (4.0 * d * math.log(t))
    return Halfwidth(half, ok, 3.0 * math.exp(-A * A / 3.0))


def concentration_halfwidth(spec: EdgeStepSpec, t: int, d: int, A: float) -> Halfwidth:
    """Band 10 d A / sqrt((1-gamma) F(t)) around E N_t(d)/F(t), its validity
    condition A < sqrt(F(t)/(1-gamma)) / (4 d log t), and failure probability 3 e^{-A^2/3}."""
    if spec.gamma >= 1.0:
        raise UnsupportedRegimeError(f"band needs gamma in [0, 1), got {spec.gamma}")
    if t < 2:
        raise DomainError("needs t >= 2")
    return halfwidth_from_F(expected_vertices(spec, t), spec.gamma, t, d, A)


def general_concentration_bound(spec: EdgeStepSpec, t: int, d: int, lam: float) -> float:
    """Upper bound on P(|N_t(d) - E N_t(d)| >= lam), valid for any edge-step function."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    if t < 1 or d < 1:
        raise DomainError("needs t >= 1 and d >= 1")
    F = expected_vertices_array(spec, t)
    s = np.arange(1, t, dtype=float)
    sigma2 = 10.0 * d * d * float(np.sum((F[1:t] + lam) / s))
    F_t = float(F[t])
    return math.exp(-lam * lam / (2.0 * sigma2 + 8.0 * lam / 3.0)) + math.exp(
        -lam * lam / (2.0 * F_t + 4.0 * lam / 3.0)
    )


def corollary_band(spec: EdgeStepSpec, t: int, d: int, A: float, alpha: float) -> float:
    """A sqrt(40 d^2 / F(t)) + err_t(alpha, f) / F(t), on the scale of P-hat_t(d).

    err_t bounds a deviation of counts, so it is divided by F(t) to sit next
    to the concentration term; its unknown constant is taken as 1.
    """
    if spec.gamma >= 1.0:
        raise UnsupportedRegimeError(f"band needs gamma in [0, 1), got {spec.gamma}")
    F_t = expected_vertices(spec, t)
    return A * math.sqrt(40.0 * d * d / F_t) + err_term(spec, t, alpha) / F_t


def warn_if_truncated(table: ExpectationTable) -> None:
    if table.truncation_warning:
        warnings.warn(
            f"d_max={table.d_max} truncates more than {TRUNCATION_WARN_FRACTION:g} F(t) of mass",
            stacklevel=2,
        )
