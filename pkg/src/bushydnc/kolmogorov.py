"""Time-bounded prefix-free complexity on one fixed toy machine.

Descriptions are bit strings in three self-delimiting forms::

    0  <len:16> <x>                      literal, 17 bits of overhead
    10 <b> <len:16>                      b repeated len times
    11 <plen:8> <pattern> <len:16>       pattern repeated, cut to len

The kind prefix and the fixed-width length fields make the domain
prefix-free. A description is decoded into a toy program and run on the
interpreter; it counts only if the program halts within the budget and emits
exactly x.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .vm import ToyProgram, execute

LEN_BITS = 16
PLEN_BITS = 8
MAX_LEN = (1 << LEN_BITS) - 1
MAX_PERIOD = (1 << PLEN_BITS) - 1


def _uint(v: int, width: int) -> tuple[int, ...]:
    return tuple((v >> (width - 1 - i)) & 1 for i in range(width))


def _read_uint(bits: Sequence[int], pos: int, width: int) -> int:
    v = 0
    for b in bits[pos: pos + width]:
        v = (v << 1) | b
    return v


@dataclass(frozen=True)
class Description:
    kind: str
    params: tuple

    def bits(self) -> tuple[int, ...]:
        if self.kind == "literal":
            (x,) = self.params
            return (0,) + _uint(len(x), LEN_BITS) + tuple(x)
        if self.kind == "repeat":
            b, n = self.params
            return (1, 0, b) + _uint(n, LEN_BITS)
        pattern, n = self.params
        return (1, 1) + _uint(len(pattern), PLEN_BITS) + tuple(pattern) + _uint(n, LEN_BITS)

    def __len__(self) -> int:
        return len(self.bits())


class PrefixFreeMachine:
    literal_overhead = 1 + LEN_BITS

    def parse(self, bits: Sequence[int]) -> Description | None:
        """Decode a complete description; None if ``bits`` is not exactly one."""
        bits = tuple(bits)
        if not bits:
            return None
        if bits[0] == 0:
            if len(bits) < 1 + LEN_BITS:
                return None
            n = _read_uint(bits, 1, LEN_BITS)
            if len(bits) != 1 + LEN_BITS + n:
                return None
            return Description("literal", (bits[1 + LEN_BITS:],))
        if len(bits) < 2:
            return None
        if bits[1] == 0:
            if len(bits) != 3 + LEN_BITS:
                return None
            return Description("repeat", (bits[2], _read_uint(bits, 3, LEN_BITS)))
        if len(bits) < 2 + PLEN_BITS:
            return None
        p = _read_uint(bits, 2, PLEN_BITS)
        if p == 0 or len(bits) != 2 + PLEN_BITS + p + LEN_BITS:
            return None
        pattern = bits[2 + PLEN_BITS: 2 + PLEN_BITS + p]
        return Description("period", (pattern, _read_uint(bits, 2 + PLEN_BITS + p, LEN_BITS)))

    def program(self, desc: Description) -> ToyProgram:
        if desc.kind == "literal":
            out = desc.params[0]
        elif desc.kind == "repeat":
            b, n = desc.params
            return ToyProgram.parse(f"PUSH {n} DUP JZ 8 PUSH {b} EMIT PUSH 1 SUB JMP 1 HALT")
        else:
            pattern, n = desc.params
            out = [pattern[i % len(pattern)] for i in range(n)]
        body = " ".join(f"PUSH {b} EMIT" for b in out)
        return ToyProgram.parse(f"{body} PUSH 0 HALT")

    def run(self, bits: Sequence[int], t: int) -> tuple[int, ...] | None:
        desc = self.parse(bits)
        if desc is None:
            return None
        ex = execute(self.program(desc), t)
        return tuple(ex.bits) if ex.status == "halted" else None

    def candidates(self, x: Sequence[int]) -> Iterator[Description]:
        """Descriptions that could print x, cheapest of each kind."""
        x = tuple(x)
        if len(x) > MAX_LEN:
            raise ValueError(f"string of length {len(x)} exceeds {MAX_LEN}")
        if x and all(b == x[0] for b in x):
            yield Description("repeat", (x[0], len(x)))
        for p in range(1, min(MAX_PERIOD, len(x)) + 1):
            if all(x[i] == x[i - p] for i in range(p, len(x))):
                yield Description("period", (x[:p], len(x)))
                break


def k_approx(x: Sequence[int], machine: PrefixFreeMachine, t: int) -> int:
    """Length of the shortest description printing x within t steps (literal fallback)."""
    x = tuple(x)
    best = len(x) + machine.literal_overhead
    for desc in machine.candidates(x):
        size = len(desc)
        if size < best and machine.run(desc.bits(), t) == x:
            best = size
    return best


def is_h_complex_prefix(x: Sequence[int], h0: Callable[[int], int], c: int,
                        machine: PrefixFreeMachine, t: int) -> bool:
    """K_t(x | h0(n)) >= n - c for every n with h0(n) <= |x|."""
    x = tuple(x)
    n = 0
    while h0(n) <= len(x):
        if k_approx(x[: h0(n)], machine, t) < n - c:
            return False
        n += 1
    return True


def canonical_bytes(obj) -> bytes:
    """Deterministic JSON encoding (sorted keys, no spaces) used for code lengths."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def description_bound(obj, machine: PrefixFreeMachine | None = None) -> int:
    """An upper bound, in bits, on the complexity of ``obj``: its canonical
    encoding as a literal description."""
    machine = machine or PrefixFreeMachine()
    return 8 * len(canonical_bytes(obj)) + machine.literal_overhead
