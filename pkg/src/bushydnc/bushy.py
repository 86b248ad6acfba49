"""Strings, bushy trees, bigness within caps, closure and random walks.

Strings over omega are plain tuples of naturals. Every decision about an
infinite or c.e. set is made inside an explicit grid: nodes of length at most
``depth_cap`` whose entries are below ``width_cap``. "Small" therefore always
means "small within the caps".
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Container, Iterable, Iterator, Sequence

OmegaString = tuple  # tuple[int, ...]

LAMBDA: OmegaString = ()


def is_prefix(s: Sequence[int], t: Sequence[int]) -> bool:
    """s is a prefix of t."""
    return len(s) <= len(t) and tuple(t[: len(s)]) == tuple(s)


def comparable(s: Sequence[int], t: Sequence[int]) -> bool:
    return is_prefix(s, t) or is_prefix(t, s)


def prefixes(s: Sequence[int]) -> Iterator[OmegaString]:
    s = tuple(s)
    for i in range(len(s) + 1):
        yield s[:i]


# ---------------------------------------------------------------------------
# growth functions


class GrowthFn:
    """A function from depth to a natural bound.

    ``tag`` records how the values are produced: ``closed-form``, ``table``,
    ``sum-of`` or ``scaled``.
    """

    def __init__(self, fn: Callable[[int], int], tag: str = "closed-form", name: str = "",
                 horizon: int | None = None):
        self._fn = fn
        self.tag = tag
        self.name = name or tag
        self.horizon = horizon

    def __call__(self, i: int) -> int:
        if self.horizon is not None and i >= self.horizon:
            raise ValueError(f"{self.name}: depth {i} beyond horizon {self.horizon}")
        v = self._fn(i)
        if v < 0:
            raise ValueError(f"{self.name}({i}) = {v} is negative")
        return v

    def __add__(self, other: "GrowthFn") -> "GrowthFn":
        return GrowthFn(lambda i: self(i) + other(i), "sum-of", f"({self.name}+{other.name})",
                        _min_horizon(self.horizon, other.horizon))

    def __repr__(self) -> str:
        return f"GrowthFn({self.name})"

    @classmethod
    def constant(cls, c: int) -> "GrowthFn":
        return cls(lambda i: c, "closed-form", f"const{c}")

    @classmethod
    def table(cls, values: Sequence[int], name: str = "table") -> "GrowthFn":
        vals = tuple(int(v) for v in values)
        return cls(vals.__getitem__, "table", name, horizon=len(vals))

    @classmethod
    def power2(cls, offset: int) -> "GrowthFn":
        """i -> 2**(i + offset)."""
        return cls(lambda i: 1 << (i + offset), "closed-form", f"2^(i+{offset})")

    def scaled_down(self, shift: int) -> "GrowthFn":
        """ceil(self(i) / 2**shift); the bushiness an integer child count must meet."""
        return GrowthFn(lambda i: -((-self(i)) >> shift), "scaled", f"{self.name}/2^{shift}",
                        self.horizon)

    def times_power2(self, shift: int) -> "GrowthFn":
        return GrowthFn(lambda i: self(i) << shift, "scaled", f"2^{shift}*{self.name}",
                        self.horizon)


def _min_horizon(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def sum_of(fns: Iterable[GrowthFn]) -> GrowthFn:
    fns = tuple(fns)
    if not fns:
        return GrowthFn.constant(0)
    out = fns[0]
    for f in fns[1:]:
        out = out + f
    return out


# ---------------------------------------------------------------------------
# sets


class PredicateSet:
    """A set of strings given by a decidable predicate.

    ``settled(tau)`` may return True when every extension of ``tau`` has the
    same membership as ``tau``; bigness searches use it to prune.
    """

    def __init__(self, pred: Callable[[OmegaString], bool], name: str = "",
                 settled: Callable[[OmegaString], bool] | None = None):
        self.pred = pred
        self.name = name
        self.settled = settled

    def __contains__(self, tau) -> bool:
        return self.pred(tuple(tau))

    def __repr__(self) -> str:
        return f"PredicateSet({self.name})"


class UnionSet:
    def __init__(self, *parts: Container):
        self.parts = parts

    def __contains__(self, tau) -> bool:
        return any(tau in p for p in self.parts)


def _settled(B: Container, tau: OmegaString) -> bool:
    hook = getattr(B, "settled", None)
    return bool(hook(tau)) if hook is not None else False


class EnumerableSet:
    """A c.e. set presented by monotone stage snapshots.

    ``snapshot(stage)`` returns a container (a frozenset or any object with
    ``__contains__``); monotonicity in the stage is the caller's contract and
    :func:`check_monotone` audits it on finite snapshots.
    """

    def __init__(self, snapshot: Callable[[int], Container], name: str = ""):
        self._snapshot = snapshot
        self.name = name

    def at(self, stage: int) -> Container:
        return self._snapshot(stage)

    def contains(self, x, stage: int) -> bool:
        return tuple(x) in self._snapshot(stage)

    @classmethod
    def static(cls, items: Iterable[Sequence[int]], name: str = "static") -> "EnumerableSet":
        frozen = frozenset(tuple(x) for x in items)
        return cls(lambda s: frozen, name)

    @classmethod
    def empty(cls) -> "EnumerableSet":
        return cls.static((), "empty")

    def __repr__(self) -> str:
        return f"EnumerableSet({self.name})"


def check_monotone(es: EnumerableSet, stages: Iterable[int]) -> bool:
    prev = None
    for s in sorted(stages):
        cur = es.at(s)
        if prev is not None and not set(prev) <= set(cur):
            return False
        prev = cur
    return True


# ---------------------------------------------------------------------------
# witness trees


@dataclass(frozen=True)
class WitnessTree:
    stem: OmegaString
    nodes: frozenset
    _children: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(self.stem))
        nodes = frozenset(tuple(n) for n in self.nodes)
        object.__setattr__(self, "nodes", nodes)
        kids: dict = {}
        for n in nodes:
            if n:
                kids.setdefault(n[:-1], []).append(n)
        for v in kids.values():
            v.sort()
        object.__setattr__(self, "_children", kids)

    def children(self, node: OmegaString) -> list:
        return self._children.get(tuple(node), [])

    def is_leaf(self, node: OmegaString) -> bool:
        return not self._children.get(tuple(node))

    @property
    def leaves(self) -> list:
        return sorted(n for n in self.nodes if self.is_leaf(n))

    @property
    def height(self) -> int:
        return max(len(n) for n in self.nodes) - len(self.stem)

    def prefix_closed(self) -> bool:
        return all(n[:-1] in self.nodes for n in self.nodes if n)

    def to_json(self) -> dict:
        order = sorted(self.nodes, key=lambda n: (len(n), n))
        return {
            "stem": list(self.stem),
            "nodes": [list(n) for n in order],
            "leaf": [self.is_leaf(n) for n in order],
        }

    @classmethod
    def from_json(cls, data: dict) -> "WitnessTree":
        return cls(tuple(data["stem"]), frozenset(tuple(n) for n in data["nodes"]))

    @classmethod
    def single(cls, sigma: Sequence[int]) -> "WitnessTree":
        sigma = tuple(sigma)
        return cls(sigma, frozenset(prefixes(sigma)))


def verify_witness(tree: WitnessTree, B: Container, g: GrowthFn) -> bool:
    stem = tree.stem
    if stem not in tree.nodes or not tree.prefix_closed():
        return False
    for node in tree.nodes:
        if not comparable(node, stem):
            return False
        if len(node) < len(stem):
            continue
        kids = tree.children(node)
        if not kids:
            if node not in B:
                return False
        elif len(kids) < g(len(node)):
            return False
    return True


# ---------------------------------------------------------------------------
# bigness within caps


class _BigSearch:
    """Memoised backward induction over the capped grid above a stem.

    A node is big when it is in B, or when at least max(g(|node|), 1) of its
    width-capped children are big. Children are scanned in lexicographic order
    and the scan stops as soon as the count is reached, so the first big
    children found are the lexicographically least ones.
    """

    def __init__(self, B: Container, g: GrowthFn, depth_cap: int, width_cap: int,
                 child_bound: GrowthFn | None = None):
        self.B = B
        self.g = g
        self.depth_cap = depth_cap
        self.width_cap = width_cap
        self.child_bound = child_bound
        self.memo: dict = {}
        self.kids: dict = {}

    def width(self, depth: int) -> int:
        w = self.width_cap
        if self.child_bound is not None:
            w = min(w, self.child_bound(depth))
        return w

    def big(self, tau: OmegaString) -> bool:
        hit = self.memo.get(tau)
        if hit is not None:
            return hit
        B = self.B
        if tau in B:
            res = True
        elif len(tau) >= self.depth_cap or _settled(B, tau):
            res = False
        else:
            d = len(tau)
            need = max(self.g(d), 1)
            w = self.width(d)
            if need > w:
                res = False
            else:
                found = []
                for c in range(w):
                    if w - c + len(found) < need:
                        break
                    child = tau + (c,)
                    if self.big(child):
                        found.append(child)
                        if len(found) >= need:
                            break
                res = len(found) >= need
                if res:
                    self.kids[tau] = found
        self.memo[tau] = res
        return res

    def witness(self, sigma: OmegaString) -> WitnessTree:
        nodes = set(prefixes(sigma))
        stack = [sigma]
        while stack:
            tau = stack.pop()
            if tau in self.B:
                continue
            for child in self.kids[tau]:
                nodes.add(child)
                stack.append(child)
        return WitnessTree(sigma, frozenset(nodes))


def is_big_bounded(B: Container, sigma: Sequence[int], g: GrowthFn, depth_cap: int,
                   width_cap: int, *, child_bound: GrowthFn | None = None) -> WitnessTree | None:
    """Return a witness that B is g-big above sigma within the caps, or None.

    ``child_bound`` optionally restricts the grid to a tree {tau : tau(i) <
    child_bound(i)}.
    """
    sigma = tuple(sigma)
    if depth_cap < len(sigma):
        raise ValueError(f"depth_cap {depth_cap} is below |sigma| = {len(sigma)}")
    search = _BigSearch(B, g, depth_cap, width_cap, child_bound)
    if not search.big(sigma):
        return None
    return search.witness(sigma)


def grid(depth_cap: int, width_cap: int, root: OmegaString = LAMBDA) -> Iterator[OmegaString]:
    root = tuple(root)
    for extra in range(depth_cap - len(root) + 1):
        for tail in itertools.product(range(width_cap), repeat=extra):
            yield root + tail


def closure(B: Container, g: GrowthFn, depth_cap: int, width_cap: int,
            root: OmegaString = LAMBDA) -> frozenset:
    """All grid nodes above which B is g-big within the caps."""
    search = _BigSearch(B, g, depth_cap, width_cap)
    out = set()
    for tau in grid(depth_cap, width_cap, root):
        if search.big(tau):
            out.add(tau)
    return frozenset(out)


def glue(base: WitnessTree, tops: dict) -> WitnessTree:
    """Replace each leaf of ``base`` by the tree ``tops[leaf]`` stemmed at that leaf."""
    nodes = set(base.nodes)
    for leaf in base.leaves:
        if len(leaf) < len(base.stem):
            continue
        top = tops[leaf]
        if top.stem != leaf:
            raise ValueError(f"tree for leaf {leaf} has stem {top.stem}")
        nodes.update(n for n in top.nodes if is_prefix(leaf, n))
    return WitnessTree(base.stem, frozenset(nodes))


def exhaustive_witness_search(B: Container, sigma: Sequence[int], g: GrowthFn,
                              depth_cap: int, width_cap: int) -> WitnessTree | None:
    """Brute force: enumerate every exactly-max(g,1)-branching tree in the grid.

    Any bushy witness can be pruned to one whose internal nodes have exactly
    max(g, 1) children, so this enumeration is complete. Independent of
    :func:`is_big_bounded`; exponential, for small grids only.
    """
    sigma = tuple(sigma)

    def candidates(tau: OmegaString) -> Iterator[frozenset]:
        yield frozenset((tau,))
        if len(tau) >= depth_cap:
            return
        k = max(g(len(tau)), 1)
        if k > width_cap:
            return
        for combo in itertools.combinations(range(width_cap), k):
            sub = [list(candidates(tau + (c,))) for c in combo]
            for pick in itertools.product(*sub):
                yield frozenset((tau,)).union(*pick)

    base = frozenset(prefixes(sigma))
    for cand in candidates(sigma):
        tree = WitnessTree(sigma, base | cand)
        if verify_witness(tree, B, g):
            return tree
    return None


# ---------------------------------------------------------------------------
# random walks and the avoidance bound


class WalkFault(RuntimeError):
    pass


@dataclass
class WalkResult:
    path: OmegaString
    hit_set: bool
    hit_depth: int | None
    restrictions_log: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "path": list(self.path),
            "hit_set": self.hit_set,
            "hit_depth": self.hit_depth,
            "restrictions": [{"start": a, "end": b, "label": lab}
                             for (a, b), lab in self.restrictions_log],
        }


def random_walk(h_eff: GrowthFn, avoid: EnumerableSet | Container, depth: int,
                restrictions: Sequence[tuple[int, WitnessTree]] = (),
                rng: random.Random | None = None, stage: int | None = None) -> WalkResult:
    """Uniform downward walk; inside a restriction, uniform among the tree's children.

    ``restrictions`` is a schedule of ``(trigger_depth, tree)``: when the path
    reaches ``trigger_depth`` the walk follows ``tree`` until it reaches a leaf.
    """
    rng = rng or random.Random()
    if isinstance(avoid, EnumerableSet):
        avoid = avoid.at(depth if stage is None else stage)
    schedule = {t: (j, tree) for j, (t, tree) in enumerate(restrictions)}
    path: OmegaString = ()
    hit_depth = 0 if () in avoid else None
    log = []
    active = None
    start = 0
    while len(path) < depth:
        d = len(path)
        if active is None and d in schedule:
            j, tree = schedule[d]
            if path not in tree.nodes:
                raise WalkFault(f"restriction {j} does not contain node {path}")
            active, start = (j, tree), d
        if active is not None:
            kids = active[1].children(path)
            if not kids:
                log.append(((start, d), f"witness#{active[0]}"))
                active = None
                continue
            path = kids[rng.randrange(len(kids))]
        else:
            bound = h_eff(d)
            if bound < 1:
                raise ValueError(f"h_eff({d}) = {bound} < 1")
            path = path + (rng.randrange(bound),)
        if hit_depth is None and path in avoid:
            hit_depth = len(path)
    if active is not None:
        log.append(((start, len(path)), f"witness#{active[0]}"))
    return WalkResult(path, hit_depth is not None, hit_depth, log)


def avoidance_lower_bound(g: GrowthFn, h: GrowthFn, depth: int) -> Fraction:
    """prod_{i < depth} (1 - g(i)/h(i)) as an exact rational."""
    out = Fraction(1)
    for i in range(depth):
        gi, hi = g(i), h(i)
        if gi > hi:
            raise ValueError(f"g({i}) = {gi} exceeds h({i}) = {hi}")
        out *= 1 - Fraction(gi, hi)
    return out


def exact_avoid_probability(h_eff: GrowthFn, avoid: Container, depth: int,
                            root: OmegaString = LAMBDA) -> Fraction:
    """Exact probability that a uniform h_eff-walk to ``depth`` avoids ``avoid``.

    Backward induction over every node; children above a settled non-member
    are skipped.
    """
    def prob(tau: OmegaString) -> Fraction:
        if tau in avoid:
            return Fraction(0)
        if len(tau) >= depth or _settled(avoid, tau):
            return Fraction(1)
        w = h_eff(len(tau))
        return sum((prob(tau + (c,)) for c in range(w)), Fraction(0)) / w

    return prob(tuple(root))


def planted_closed_set(g: GrowthFn) -> PredicateSet:
    """The maximal g-closed set that is g-small above lambda.

    tau is a member iff tau(i) < g(i) - 1 for some i: every non-member has
    exactly g(i) - 1 member children, one short of making it big.
    """
    def pred(tau):
        return any(v < g(i) - 1 for i, v in enumerate(tau))

    return PredicateSet(pred, name=f"planted[{g.name}]", settled=pred)
