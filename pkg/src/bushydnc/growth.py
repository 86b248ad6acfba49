"""The growth hierarchy g_0, g_1, ... and h, plus the Kolmogorov-margin threshold.

Every g_k(i) and h(k) is a power of two, so the family stores base-2
exponents and materialises values only on request. Exact mode follows the
recurrence literally; exact values are towers, usable up to k = 2.

Scaled mode keeps the shape of the recurrence but replaces the exponent
h(k-1) (the length of the output strings rho) by a small target length
``target(k)``, and sets h(k) = 2^(k+m) * g_k(k). Two inequalities are all the
correctness arguments need, and scaled mode keeps both:

* restriction safety  g_k(i) / 2^target(k) >= 2^(i+m) * g_j(i)   (j < k <= i)
* draw safety         h(i) >= 2^(i+m) * g_k(i)                   (k <= i)

In exact mode draw safety holds only for k < i, since h(i) = g_i(i).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .bushy import GrowthFn


def cantor(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def triple(i: int, a: int, b: int) -> int:
    """<i, a, b> = cantor(cantor(i, a), b)."""
    return cantor(cantor(i, a), b)


@dataclass(frozen=True)
class InequalityFailure:
    name: str
    k: int
    i: int
    j: int | None = None


H0_FUNCTIONS: dict[str, Callable[[int], int]] = {
    "succ": lambda n: n + 1,
    "double": lambda n: 2 * n,
    "square": lambda n: n * n,
}


def resolve_h0(h0: str | Callable[[int], int] | None) -> tuple[Callable[[int], int] | None, str | None]:
    if h0 is None:
        return None, None
    if isinstance(h0, str):
        if h0 not in H0_FUNCTIONS:
            raise ValueError(f"unknown h0 {h0!r}; known: {sorted(H0_FUNCTIONS)}")
        return H0_FUNCTIONS[h0], h0
    return h0, getattr(h0, "__name__", "custom")


class GrowthFamily:
    def __init__(self, m: int, mode: str = "scaled", k_max: int = 32,
                 h0: str | Callable[[int], int] | None = None,
                 target: Callable[[int], int] | None = None,
                 restriction_slack: int = 0, draw_slack: int = 0):
        if mode not in ("exact", "scaled"):
            raise ValueError(f"mode must be 'exact' or 'scaled', not {mode!r}")
        if m < 0:
            raise ValueError("m must be a natural number")
        self.m = m
        self.mode = mode
        self.k_max = k_max
        self.h0, self.h0_name = resolve_h0(h0)
        self._target = target or (lambda k: k)
        self.restriction_slack = restriction_slack
        self.draw_slack = draw_slack
        self._e: dict = {}
        self._t: dict = {}
        if mode == "scaled":
            bad = self.audit(k_max)
            if bad:
                raise ValueError(f"scaled parameters violate {bad[0].name} at "
                                 f"k={bad[0].k}, i={bad[0].i}, j={bad[0].j}")

    # exponents -------------------------------------------------------------
    def target_len(self, k: int) -> int:
        """Length of the output strings rho a requirement attended at depth k looks for."""
        if k < 1:
            raise ValueError("target length is defined for k >= 1")
        hit = self._t.get(k)
        if hit is None:
            if self.mode == "exact":
                base = 1 << self.g_log2(k - 1, k - 1)
            else:
                base = self._target(k)
                if base < 1:
                    raise ValueError(f"target({k}) = {base} < 1")
            hit = self.h0(base) if self.h0 is not None else base
            self._t[k] = hit
        return hit

    def g_log2(self, k: int, i: int) -> int:
        key = (k, i)
        hit = self._e.get(key)
        if hit is not None:
            return hit
        if k == 0:
            val = i + self.m
        elif i < k:
            val = 0
        else:
            val = self.g_log2(k - 1, i) + self.target_len(k) + i + self.m + self.restriction_slack
        self._e[key] = val
        return val

    def h_log2(self, k: int) -> int:
        if self.mode == "exact":
            return self.g_log2(k, k)
        return self.g_log2(k, k) + k + self.m + self.draw_slack

    def restriction_log2(self, k: int, i: int) -> int:
        """log2 of g_k(i) / 2^target(k); may be negative below depth k."""
        return self.g_log2(k, i) - self.target_len(k)

    # values ------------------------------------------------------------------
    def g(self, k: int, i: int) -> int:
        return 1 << self.g_log2(k, i)

    def h(self, k: int) -> int:
        return 1 << self.h_log2(k)

    def g_fn(self, k: int) -> GrowthFn:
        return GrowthFn(lambda i: self.g(k, i), "closed-form", f"g_{k}")

    def h_fn(self) -> GrowthFn:
        return GrowthFn(self.h, "closed-form", "h")

    def restriction_fn(self, k: int) -> GrowthFn:
        """ceil(g_k / 2^target(k)): the bushiness demanded of an active witness."""
        t = self.target_len(k)
        return GrowthFn(lambda i: 1 << max(self.g_log2(k, i) - t, 0), "scaled", f"g_{k}/2^{t}")

    # audits ------------------------------------------------------------------
    def audit(self, k_max: int | None = None) -> list[InequalityFailure]:
        """Indices (up to k_max) where a preserved inequality fails."""
        top = self.k_max if k_max is None else k_max
        m = self.m
        bad = []
        for i in range(top + 1):
            if self.h_log2(i) < i + m:
                bad.append(InequalityFailure("draw-floor", i, i))
            for k in range(0, i + 1):
                if k < i or self.mode == "scaled":
                    if self.h_log2(i) < i + m + self.g_log2(k, i):
                        bad.append(InequalityFailure("draw-safety", k, i))
                if k >= 1:
                    r = self.restriction_log2(k, i)
                    if r < i + m:
                        bad.append(InequalityFailure("restriction-floor", k, i))
                    for j in range(k):
                        if r < i + m + self.g_log2(j, i):
                            bad.append(InequalityFailure("restriction-safety", k, i, j))
        return bad

    def describe(self) -> dict:
        return {"m": self.m, "mode": self.mode, "k_max": self.k_max, "h0": self.h0_name,
                "restriction_slack": self.restriction_slack, "draw_slack": self.draw_slack}

    @classmethod
    def from_description(cls, data: dict) -> "GrowthFamily":
        return cls(data["m"], data["mode"], data["k_max"], h0=data.get("h0"),
                   restriction_slack=data.get("restriction_slack", 0),
                   draw_slack=data.get("draw_slack", 0))

    def table(self, k_max: int) -> list[dict]:
        rows = []
        for k in range(k_max + 1):
            rows.append({"k": k, "g": [self.g(k, i) for i in range(k_max + 1)], "h": self.h(k)})
        return rows


def growth_family(m: int, mode: str = "exact", k_max: int = 2,
                  h0: str | Callable[[int], int] | None = None, **scaled) -> GrowthFamily:
    return GrowthFamily(m, mode, k_max, h0=h0, **scaled)


def log2_ceil(v: int) -> int:
    return (v - 1).bit_length() if v > 1 else 0


def requirement_threshold(k: int, family: GrowthFamily, k_gamma: int, c2: int) -> int:
    """2 * sum_{i<=k-1} log h(i) + K(Gamma) - target(k) + c''.

    target(k) is h(k-1) in exact mode. A requirement with constant d may first
    receive attention at a depth k where this is below -d.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    logs = sum(family.h_log2(i) for i in range(k))
    return 2 * logs + k_gamma - family.target_len(k) + c2


def first_allowed_stage(family: GrowthFamily, k_gamma: int, c2: int, d: int,
                        k_limit: int) -> int | None:
    for k in range(1, k_limit + 1):
        if requirement_threshold(k, family, k_gamma, c2) < -d:
            return k
    return None
