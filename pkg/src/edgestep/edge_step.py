"""Edge-step functions f(t) = l(t) t^(-gamma) and their regular-variation numerics.

Every family is written as a slowly varying part ``l`` times a pure power.
``f`` itself is clamped to ``[0, 1]``; the Karamata functionals (H, G, the
error term) use the unclamped ``l``, extended as the constant ``l(1)`` on
``(0, 1)`` so the integrals over ``(0, t]`` are defined.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import ClassVar, NamedTuple, Sequence

import numpy as np
from scipy import integrate


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedRegimeError(ValueError):
    """The operation is only defined for gamma in [0, 1)."""


@dataclass(frozen=True, kw_only=True)
class EdgeStepSpec:
    """Base class of the edge-step function catalog.

    Subclasses implement ``slowly_varying`` on arrays of times ``s >= 1``.
    """

    family: ClassVar[str] = ""
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be a finite real >= 0, got {self.gamma!r}")

    def slowly_varying(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def constant_slowly_varying(self) -> bool:
        return False

    def params(self) -> dict:
        """Family parameters in text-form order (``family`` excluded)."""
        raise NotImplementedError


@dataclass(frozen=True, kw_only=True)
class PowerLaw(EdgeStepSpec):
    """f(t) = min(1, c t^-gamma)."""

    family: ClassVar[str] = "power_law"
    c: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c!r}")

    def slowly_varying(self, s):
        return np.full(np.shape(s), float(self.c))

    @property
    def constant_slowly_varying(self):
        return True

    def params(self):
        return {"c": self.c, "gamma": self.gamma}


@dataclass(frozen=True, kw_only=True)
class InverseLogPower(EdgeStepSpec):
    """l(t) = (log(e t))^-c."""

    family: ClassVar[str] = "inverse_log_power"
    c: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c!r}")

    def slowly_varying(self, s):
        return (1.0 + np.log(s)) ** (-self.c)

    def params(self):
        return {"c": self.c, "gamma": self.gamma}


@dataclass(frozen=True, kw_only=True)
class InverseLogLog(EdgeStepSpec):
    """l(t) = 1 / log(log(e^2 t)); exceeds 1 for t < e^(e-2), where f is clamped."""

    family: ClassVar[str] = "inverse_log_log"
    gamma: float = 0.0

    def slowly_varying(self, s):
        return 1.0 / np.log(2.0 + np.log(s))

    def params(self):
        return {"gamma": self.gamma}


@dataclass(frozen=True, kw_only=True)
class ExpNegLogDelta(EdgeStepSpec):
    """l(t) = exp(-(log t)^sv_delta) with sv_delta in (0, 1)."""

    family: ClassVar[str] = "exp_neg_log_delta"
    sv_delta: float = 0.5
    gamma: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.sv_delta < 1.0:
            raise DomainError(f"sv_delta must lie in (0, 1), got {self.sv_delta!r}")

    def slowly_varying(self, s):
        return np.exp(-np.log(s) ** self.sv_delta)

    def params(self):
        return {"sv_delta": self.sv_delta, "gamma": self.gamma}


@dataclass(frozen=True, kw_only=True)
class Constant(EdgeStepSpec):
    """f(t) = p. Not in RES(0) (it does not decay), kept for constant-p cross-checks."""

    family: ClassVar[str] = "constant"
    p: float = 0.5
    gamma: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 < self.p <= 1.0:
            raise DomainError(f"p must lie in (0, 1], got {self.p!r}")
        if self.gamma != 0.0:
            raise DomainError("the constant family has gamma = 0")

    def slowly_varying(self, s):
        return np.full(np.shape(s), float(self.p))

    @property
    def constant_slowly_varying(self):
        return True

    def params(self):
        return {"p": self.p}


FAMILIES = {
    cls.family: cls
    for cls in (PowerLaw, InverseLogPower, InverseLogLog, ExpNegLogDelta, Constant)
}


# ---------------------------------------------------------------------------
# text form: ``family=power_law c=1.0 gamma=0.5``


def format_spec(spec: EdgeStepSpec) -> str:
    parts = [f"family={spec.family}"]
    parts += [f"{k}={float(v)!r}" for k, v in spec.params().items()]
    return " ".join(parts)


def spec_from_mapping(values: dict) -> EdgeStepSpec:
    """Build a spec from string or numeric values keyed by parameter name.

    Keys that do not belong to the family are ignored, so a whole experiment
    config can be passed in.
    """
    if "family" not in values:
        raise KeyError("family")
    name = values["family"]
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise DomainError(
            f"unknown family {name!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    kwargs = {}
    for key in cls().params():
        if key in values:
            try:
                kwargs[key] = float(values[key])
            except ValueError:
                raise DomainError(f"{key}: not a number: {values[key]!r}") from None
    return cls(**kwargs)


def parse_spec(text: str) -> EdgeStepSpec:
    values = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise DomainError(f"expected key=value, got {token!r}")
        values[key] = value
    return spec_from_mapping(values)


# ---------------------------------------------------------------------------
# evaluation


def _ell(spec: EdgeStepSpec, s) -> np.ndarray:
    """Unclamped slowly varying part, constant-extended below 1."""
    return spec.slowly_varying(np.maximum(np.asarray(s, dtype=float), 1.0))


def evaluate_array(spec: EdgeStepSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise DomainError("edge-step functions are defined for t >= 1")
    raw = spec.slowly_varying(t) * t ** (-spec.gamma)
    return np.clip(raw, 0.0, 1.0)


def evaluate(spec: EdgeStepSpec, t: float) -> float:
    """f(t), the probability that the step into time t is a vertex-step."""
    if not t >= 1:
        raise DomainError(f"t must be >= 1, got {t!r}")
    return float(evaluate_array(spec, t))


class _PrefixCache:
    """Exact F(t) = 1 + sum_{s=2}^t f(s) with a dense prefix table up to
    ``dense_limit`` and memoized chunked sums beyond it."""

    chunk = 1 << 20

    def __init__(self, spec, dense_limit=1 << 22):
        self.spec = spec
        self.dense_limit = dense_limit
        self.prefix = np.ones(2)  # prefix[t] = F(t); prefix[0] unused
        self.anchors = {}
        self.lock = threading.Lock()

    def _grow(self, t):
        n = len(self.prefix) - 1
        new_n = min(max(t, 2 * n), self.dense_limit)
        s = np.arange(n + 1, new_n + 1, dtype=float)
        tail = self.prefix[-1] + np.cumsum(evaluate_array(self.spec, s))
        self.prefix = np.concatenate([self.prefix, tail])

    def value(self, t):
        with self.lock:
            if t <= self.dense_limit:
                if t >= len(self.prefix):
                    self._grow(t)
                return float(self.prefix[t])
            if t in self.anchors:
                return self.anchors[t]
            if len(self.prefix) - 1 < self.dense_limit:
                self._grow(self.dense_limit)
            start = max((a for a in self.anchors if a < t), default=self.dense_limit)
            total = self.anchors.get(start, float(self.prefix[-1]))
            s = start + 1
            while s <= t:
                hi = min(t, s + self.chunk - 1)
                total += float(np.sum(evaluate_array(self.spec, np.arange(s, hi + 1, dtype=float))))
                s = hi + 1
            self.anchors[t] = total
            return total

    def array(self, t):
        with self.lock:
            if t >= len(self.prefix):
                if t > self.dense_limit:
                    raise DomainError(f"dense F table limited to t <= {self.dense_limit}")
                self._grow(t)
            return self.prefix[: t + 1].copy()


_prefix_caches: dict = {}
_prefix_lock = threading.Lock()


def _cache_for(spec):
    with _prefix_lock:
        cache = _prefix_caches.get(spec)
        if cache is None:
            cache = _prefix_caches[spec] = _PrefixCache(spec)
        return cache


def expected_vertices(spec: EdgeStepSpec, t: int) -> float:
    """F(t) = E V_t = 1 + sum_{s=2}^t f(s), summed exactly (not the integral)."""
    t = int(t)
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    return _cache_for(spec).value(t)


def expected_vertices_array(spec: EdgeStepSpec, t_max: int) -> np.ndarray:
    """Array ``F`` with ``F[s]`` = F(s) for 1 <= s <= t_max (``F[0]`` is padding)."""
    if t_max < 1:
        raise DomainError(f"t_max must be >= 1, got {t_max}")
    return _cache_for(spec).array(int(t_max))


def integral_asymptotic(spec: EdgeStepSpec, t: float) -> float:
    """l(t) t^(1-gamma) / (1-gamma), the leading order of F(t) for gamma < 1."""
    _require_subcritical(spec)
    return float(_ell(spec, t)) * t ** (1.0 - spec.gamma) / (1.0 - spec.gamma)


# ---------------------------------------------------------------------------
# Karamata functionals


def _require_subcritical(spec):
    if spec.gamma >= 1.0:
        raise UnsupportedRegimeError(
            f"only defined for gamma in [0, 1), got gamma={spec.gamma}"
        )


def h_integral(spec: EdgeStepSpec, t: float, rel_tol: float = 1e-8) -> float:
    """H(t) = int_0^1 |l(ut)/l(t) - 1| u^-gamma du.

    On u < 1/t the extended l is the constant l(1), which gives a closed-form
    piece carrying the whole u^-gamma singularity. The rest is integrated in
    x = -log u, where the integrand is bounded and decays like e^{-(1-gamma)x}.
    """
    _require_subcritical(spec)
    if not t >= 1:
        raise DomainError(f"t must be >= 1, got {t!r}")
    if not 0 < rel_tol < 1:
        raise DomainError(f"rel_tol must lie in (0, 1), got {rel_tol!r}")
    if spec.constant_slowly_varying:
        return 0.0
    one_minus_gamma = 1.0 - spec.gamma
    lt = float(_ell(spec, t))
    head = abs(float(_ell(spec, 1.0)) / lt - 1.0) * t ** (-one_minus_gamma) / one_minus_gamma

    def integrand(x):
        return abs(float(_ell(spec, t * math.exp(-x))) / lt - 1.0) * math.exp(-one_minus_gamma * x)

    log_t = math.log(t)
    if log_t == 0.0:
        return head
    body, _ = integrate.quad(integrand, 0.0, log_t, epsabs=0.0, epsrel=rel_tol, limit=500)
    return head + body


def g_bound(spec: EdgeStepSpec, t: float) -> float:
    """H(t) + 1/(t^(1-gamma) l(t)): the stated bound on the normalized partial-sum error."""
    _require_subcritical(spec)
    return h_integral(spec, t) + 1.0 / (t ** (1.0 - spec.gamma) * float(_ell(spec, t)))


def g_bound_rigorous(spec: EdgeStepSpec, t: float) -> float:
    """H(t) + l(1) / ((1-gamma) t^(1-gamma) l(t)).

    Holds whenever l(s) s^-gamma is non-increasing, which is true for every
    catalog family. ``g_bound`` omits the l(1)/(1-gamma) factor and is violated
    by pure powers with zeta(gamma) < -1 (e.g. gamma = 1/2).
    """
    _require_subcritical(spec)
    scale = t ** (1.0 - spec.gamma) * float(_ell(spec, t))
    return h_integral(spec, t) + float(_ell(spec, 1.0)) / ((1.0 - spec.gamma) * scale)


def partial_sum_error(spec: EdgeStepSpec, t: int) -> float:
    """G(t) = |sum_{k<=t} l(k) k^-gamma - t^(1-gamma) l(t)/(1-gamma)| / (t^(1-gamma) l(t))."""
    _require_subcritical(spec)
    t = int(t)
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    total = 0.0
    for lo in range(1, t + 1, 1 << 20):
        k = np.arange(lo, min(t, lo + (1 << 20) - 1) + 1, dtype=float)
        total += float(np.sum(spec.slowly_varying(k) * k ** (-spec.gamma)))
    scale = t ** (1.0 - spec.gamma) * float(_ell(spec, t))
    return abs(total - scale / (1.0 - spec.gamma)) / scale


class ErrTerm(NamedTuple):
    total: float
    log_part: float
    early: float
    late: float
    h_part: float
    sup_h: float
    grid_cap: float
    grid_ratio: float


def err_term_breakdown(
    spec: EdgeStepSpec,
    t: float,
    alpha: float,
    grid_ratio: float = 1.25,
    cap_exponent: float = 2.0,
) -> ErrTerm:
    """Components of err_t(alpha, f) with the unknown multiplicative constant set to 1.

    The supremum of H over s >= t^alpha is a maximum over the geometric grid
    t^alpha * grid_ratio^k, capped at t^cap_exponent (cap included).
    """
    _require_subcritical(spec)
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not t >= 1:
        raise DomainError(f"t must be >= 1, got {t!r}")
    one_minus_gamma = 1.0 - spec.gamma
    ta = t**alpha
    lt = float(_ell(spec, t))
    lta = float(_ell(spec, ta))
    cap = t**cap_exponent
    if spec.constant_slowly_varying:
        sup_h = 0.0
    else:
        sup_h = 0.0
        s = ta
        while True:
            sup_h = max(sup_h, h_integral(spec, min(s, cap)))
            if s >= cap:
                break
            s *= grid_ratio
    log_part = 1.0 + math.log(t)
    early = lta * ta**one_minus_gamma
    late = lt / lta * t ** ((1.0 - alpha) * one_minus_gamma)
    h_part = sup_h * t**one_minus_gamma * lt
    return ErrTerm(
        total=log_part + early + late + h_part,
        log_part=log_part,
        early=early,
        late=late,
        h_part=h_part,
        sup_h=sup_h,
        grid_cap=cap,
        grid_ratio=grid_ratio,
    )


def err_term(spec: EdgeStepSpec, t: float, alpha: float) -> float:
    """err_t(alpha, f); a diagnostic scale, not a certified bound."""
    return err_term_breakdown(spec, t, alpha).total


def slowly_varying_ratio_diagnostic(spec: EdgeStepSpec, t_grid: Sequence[int]) -> np.ndarray:
    """l(t) / sum_{s<=t} l(s)/s at each grid time (tends to 0 for slowly varying l)."""
    grid = np.asarray(t_grid, dtype=np.int64)
    if grid.size == 0:
        return np.empty(0)
    if np.any(grid < 1):
        raise DomainError("grid times must be >= 1")
    order = np.argsort(grid, kind="stable")
    out = np.empty(grid.size)
    total, done = 0.0, 0
    for idx in order:
        t = int(grid[idx])
        for lo in range(done + 1, t + 1, 1 << 20):
            s = np.arange(lo, min(t, lo + (1 << 20) - 1) + 1, dtype=float)
            total += float(np.sum(spec.slowly_varying(s) / s))
        done = max(done, t)
        out[idx] = float(_ell(spec, t)) / total
    return out


def karamata_integral_ratio(spec: EdgeStepSpec, x: float, a: float | None = None) -> float:
    """int_1^x s^a l(s) ds / (x^(1+a) l(x)/(1+a)); tends to 1 for a > -1.

    Substituting s = x e^{-z} gives the bounded integrand (1+a) e^{-(1+a)z} l(x e^{-z}) / l(x).
    """
    if a is None:
        a = -spec.gamma
    if not a > -1:
        raise UnsupportedRegimeError(f"needs a > -1, got {a}")
    if not x > 1:
        raise DomainError(f"x must be > 1, got {x!r}")
    lx = float(_ell(spec, x))

    def integrand(z):
        return math.exp(-(1.0 + a) * z) * float(_ell(spec, x * math.exp(-z))) / lx

    val, _ = integrate.quad(integrand, 0.0, math.log(x), epsabs=0.0, epsrel=1e-10, limit=500)
    return (1.0 + a) * val


@dataclass(frozen=True, kw_only=True)
class KaramataDiagnostics:
    t: float
    H_value: float
    G_bound: float
    F_exact: float
    F_asymptotic: float


def karamata_diagnostics(spec: EdgeStepSpec, t: int) -> KaramataDiagnostics:
    _require_subcritical(spec)
    return KaramataDiagnostics(
        t=t,
        H_value=h_integral(spec, t),
        G_bound=g_bound(spec, t),
        F_exact=expected_vertices(spec, t),
        F_asymptotic=integral_asymptotic(spec, t),
    )
