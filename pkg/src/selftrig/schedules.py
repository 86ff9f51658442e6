"""Closed-form time-varying gains and thresholds.

Every supported schedule has the shape ``a * (1+t)**(-p) * exp(-b*t)``:

* constant     ``p = 0, b = 0``
* hyperbolic   ``p in {1, 2}, b = 0``
* exponential  ``p = 0, b > 0``

Keeping to these families lets the simulator advance flows with exact
antiderivatives, and lets the no-Zeno infimum be computed analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScalarSchedule:
    kind: str
    a: float
    p: int = 0
    b: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ScheduleError(f"schedule amplitude must be a positive real, got {self.a}")
        if self.kind == "constant":
            ok = self.p == 0 and self.b == 0
        elif self.kind == "hyperbolic":
            ok = self.p in (1, 2) and self.b == 0
        elif self.kind == "exponential":
            ok = self.p == 0 and self.b > 0 and math.isfinite(self.b)
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if not ok:
            raise ScheduleError(f"bad parameters for {self.kind} schedule: p={self.p}, b={self.b}")

    @classmethod
    def constant(cls, a):
        return cls("constant", float(a))

    @classmethod
    def hyperbolic(cls, a, p=1):
        return cls("hyperbolic", float(a), int(p))

    @classmethod
    def exponential(cls, a, b):
        return cls("exponential", float(a), 0, float(b))

    @classmethod
    def from_config(cls, cfg) -> "ScalarSchedule":
        """Build from ``{kind, a, p?, b?}``; a bare number means constant."""
        if isinstance(cfg, ScalarSchedule):
            return cfg
        if isinstance(cfg, (int, float)):
            return cls.constant(cfg)
        if not isinstance(cfg, dict) or "kind" not in cfg or "a" not in cfg:
            raise ScheduleError(f"schedule config needs 'kind' and 'a', got {cfg!r}")
        kind = cfg["kind"]
        extra = set(cfg) - {"kind", "a", "p", "b"}
        if extra:
            raise ScheduleError(f"unknown schedule keys {sorted(extra)}")
        if kind == "constant":
            return cls.constant(cfg["a"])
        if kind == "hyperbolic":
            return cls.hyperbolic(cfg["a"], cfg.get("p", 1))
        if kind == "exponential":
            if "b" not in cfg:
                raise ScheduleError("exponential schedule needs 'b'")
            return cls.exponential(cfg["a"], cfg["b"])
        raise ScheduleError(f"unknown schedule kind {kind!r}")

    def to_config(self) -> dict:
        out = {"kind": self.kind, "a": self.a}
        if self.kind == "hyperbolic":
            out["p"] = self.p
        if self.kind == "exponential":
            out["b"] = self.b
        return out

    @property
    def vanishes(self) -> bool:
        """True when the schedule tends to zero as t grows."""
        return self.kind != "constant"

    def value(self, t: float) -> float:
        if not t >= 0:
            raise ScheduleError(f"schedules are defined for t >= 0, got {t}")
        if self.kind == "constant":
            return self.a
        if self.kind == "hyperbolic":
            return self.a / (1.0 + t) ** self.p
        return self.a * math.exp(-self.b * t)

    __call__ = value

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral of the schedule over ``[t0, t1]`` (``t1`` may be ``inf``)."""
        if not t0 >= 0:
            raise ScheduleError(f"integral lower limit must be >= 0, got {t0}")
        if not t1 >= t0:
            raise ScheduleError(f"integral needs t1 >= t0, got [{t0}, {t1}]")
        if t1 == t0:
            return 0.0
        if self.kind == "constant":
            return self.a * (t1 - t0)
        if self.kind == "hyperbolic":
            if self.p == 1:
                if t1 == INF:
                    return INF
                return self.a * math.log1p((t1 - t0) / (1.0 + t0))
            if t1 == INF:
                return self.a / (1.0 + t0)
            return self.a * (t1 - t0) / ((1.0 + t0) * (1.0 + t1))
        head = math.exp(-self.b * t0)
        if t1 == INF:
            return self.a / self.b * head
        return self.a / self.b * head * -math.expm1(-self.b * (t1 - t0))

    def total_integral(self) -> float:
        """Integral over ``[0, inf)``; ``inf`` when divergent."""
        return self.integral(0.0, INF)


def ratio_infimum(num: ScalarSchedule, den: ScalarSchedule) -> float:
    """Exact ``inf_{t>=0} num(t) / den(t)``.

    With ``P = p_den - p_num`` and ``B = b_den - b_num`` the log-ratio is
    ``const + P*log(1+t) + B*t``, whose derivative ``P/(1+t) + B`` changes
    sign at most once.
    """
    P = den.p - num.p
    B = den.b - num.b
    base = num.a / den.a
    if P >= 0 and B >= 0:
        return base
    if P <= 0 and B <= 0:
        return 0.0
    if P > 0 and B < 0:
        return 0.0
    # P < 0 < B: decreasing, then increasing; interior minimum at 1+t = -P/B
    s = -P / B
    if s <= 1.0:
        return base
    return base * s**P * math.exp(B * (s - 1.0))


def _ratio_shape(num: ScalarSchedule, den: ScalarSchedule):
    return den.p - num.p, den.b - num.b


def sum_ratio_infimum(num: ScalarSchedule, dens) -> float:
    """``inf_t num(t) / sum_k w_k den_k(t)`` for weighted schedules ``[(w_k, den_k)]``.

    Terms with the same shape relative to ``num`` are merged, which reduces the
    usual cases (identical families) to :func:`ratio_infimum`.  Mixed shapes
    fall back to a bounded numerical search on the compactified axis.
    """
    groups: dict[tuple, float] = {}
    for w, den in dens:
        if w <= 0:
            continue
        key = _ratio_shape(num, den) + (den.kind, den.p, den.b)
        groups[key] = groups.get(key, 0.0) + w * den.a
    if not groups:
        return INF
    merged = [ScalarSchedule(k[2], amp, k[3], k[4]) for k, amp in groups.items()]
    if len(merged) == 1:
        return ratio_infimum(num, merged[0])
    if any(ratio_infimum(num, d) == 0.0 for d in merged):
        return 0.0
    return _numeric_sum_infimum(num, merged)


def _numeric_sum_infimum(num, dens) -> float:
    from scipy.optimize import minimize_scalar

    def h(s):
        t = s / (1.0 - s)
        return num.value(t) / sum(d.value(t) for d in dens)

    # limit at infinity: each term num/den tends to a constant or infinity
    tail = 0.0
    for d in dens:
        P, B = _ratio_shape(num, d)
        if P == 0 and B == 0:
            tail += d.a / num.a
    lim = INF if tail == 0.0 else 1.0 / tail
    grid = [k / 512 for k in range(512)]
    vals = [h(s) for s in grid]
    k = min(range(len(vals)), key=vals.__getitem__)
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best = min(vals[k], lim)
    if hi > lo:
        res = minimize_scalar(h, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        best = min(best, float(res.fun))
    return best
