"""Toy enumeration phi_e, the diagonal bad set, and monotone functionals."""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .bushy import EnumerableSet, OmegaString, PredicateSet, grid
from .vm import Execution, ToyProgram, execute, format_program



class ToyEnumeration:
    """An indexed list of toy programs, optionally relativised to a finite oracle."""

    def __init__(self, programs: Sequence[ToyProgram], oracle: Sequence[int] | None = None):
        self.programs = list(programs)
        self.oracle = None if oracle is None else tuple(int(b) & 1 for b in oracle)
        self._runs: dict = {}

    def __len__(self) -> int:
        return len(self.programs)

    def _run(self, e: int, n: int, steps: int, oracle) -> Execution:
        key = (e, n, oracle)
        ex = self._runs.get(key)
        if ex is not None and (ex.final or ex.steps >= steps):
            return ex
        budget = max(steps, 2 * ex.steps if ex is not None else 64)
        ex = execute(self.programs[e], budget, n=n, oracle=oracle)
        self._runs[key] = ex
        return ex

    def phi(self, e: int, n: int, steps: int, oracle: Sequence[int] | None = None) -> int | None:
        if not 0 <= e < len(self.programs):
            raise IndexError(f"index {e} outside enumeration of size {len(self.programs)}")
        orc = self.oracle if oracle is None else tuple(oracle)
        ex = self._run(e, n, steps, orc)
        if ex.status == "halted" and ex.steps <= steps:
            return ex.value
        return None

    def diagonal(self, steps: int, limit: int | None = None) -> dict[int, int]:
        """{e: phi_e(e)} for the e < limit that halt within ``steps``."""
        top = len(self.programs) if limit is None else min(limit, len(self.programs))
        out = {}
        for e in range(top):
            v = self.phi(e, e, steps)
            if v is not None:
                out[e] = v
        return out

    # corpus file: one program per line, mnemonics separated by spaces,
    # an optional "# name" comment
    def dump_corpus(self, path: str | Path) -> None:
        lines = [f"{format_program(p)}  # {p.name}" if p.name else format_program(p)
                 for p in self.programs]
        Path(path).write_text("\n".join(lines) + "\n")

    def manifest(self) -> str:
        return json.dumps({str(i): format_program(p) for i, p in enumerate(self.programs)},
                          indent=1)

    @classmethod
    def from_corpus_text(cls, text: str, oracle=None) -> "ToyEnumeration":
        progs = []
        for line in text.splitlines():
            body, _, name = line.partition("#")
            if not body.strip():
                continue
            progs.append(ToyProgram.parse(body, name=name.strip()))
        return cls(progs, oracle)

    @classmethod
    def from_manifest(cls, text: str, oracle=None) -> "ToyEnumeration":
        data = json.loads(text)
        return cls([ToyProgram.parse(data[str(i)]) for i in range(len(data))], oracle)

    @classmethod
    def load(cls, path: str | Path, oracle=None) -> "ToyEnumeration":
        text = Path(path).read_text()
        if str(path).endswith(".json"):
            return cls.from_manifest(text, oracle)
        return cls.from_corpus_text(text, oracle)


def default_enumeration(oracle=None) -> ToyEnumeration:
    """The shipped 64-program corpus."""
    text = resources.files("bushydnc").joinpath("data/corpus64.txt").read_text()
    return ToyEnumeration.from_corpus_text(text, oracle)


def phi(enum: ToyEnumeration, e: int, n: int, steps: int, oracle=None) -> int | None:
    return enum.phi(e, n, steps, oracle)


# ---------------------------------------------------------------------------
# B_DNC


class DiagonalBadSet:
    """Strings of length <= length_cap that agree with some halted phi_e(e), e < |sigma|."""

    def __init__(self, forbidden: dict[int, int], length_cap: int):
        self.forbidden = dict(forbidden)
        self.length_cap = length_cap

    def __contains__(self, sigma) -> bool:
        if len(sigma) > self.length_cap:
            return False
        fb = self.forbidden
        return any(fb.get(e) == v for e, v in enumerate(sigma))

    def settled(self, tau) -> bool:
        return not any(e in self.forbidden for e in range(len(tau), self.length_cap))

    def members(self, width_cap: int) -> frozenset:
        return frozenset(t for t in grid(self.length_cap, width_cap) if t in self)


def b_dnc_stage(enum: ToyEnumeration, stage: int, length_cap: int) -> DiagonalBadSet:
    return DiagonalBadSet(enum.diagonal(stage, limit=length_cap), length_cap)


def b_dnc_set(enum: ToyEnumeration, length_cap: int) -> EnumerableSet:
    return EnumerableSet(lambda s: b_dnc_stage(enum, s, length_cap), "B_DNC")


def is_dnc_prefix(sigma: Sequence[int], enum: ToyEnumeration, steps: int) -> bool:
    for e, v in enumerate(sigma):
        if e >= len(enum):
            break
        if enum.phi(e, e, steps) == v:
            return False
    return True


# ---------------------------------------------------------------------------
# functionals


@dataclass
class Functional:
    """A toy program read as a monotone map from omega-strings to bit strings.

    The program reads tape cells with READ and commits output bits with EMIT;
    reading past the end of the input stops the computation, so the output on
    a string is always a prefix of the output on any extension.
    """

    program: ToyProgram
    name: str = ""
    _exact: dict = field(default_factory=dict, repr=False, compare=False)
    _shared: dict = field(default_factory=dict, repr=False, compare=False)
    _widths: list = field(default_factory=list, repr=False, compare=False)

    def _lookup(self, tau: OmegaString) -> Execution | None:
        # a run that never blocked and read only tau[:r] is valid for every
        # string sharing that prefix; longer footprints are fresher
        for r in self._widths:
            if r <= len(tau):
                ex = self._shared.get(tau[:r])
                if ex is not None:
                    return ex
        return self._exact.get(tau)

    def _exec(self, tau: OmegaString, steps: int) -> Execution:
        ex = self._lookup(tau)
        if ex is not None and (ex.final or ex.steps >= steps):
            return ex
        if len(self._exact) + len(self._shared) > 200_000:
            self._exact.clear()
            self._shared.clear()
            self._widths.clear()
        budget = max(steps, 2 * ex.steps if ex is not None else 32)
        ex = execute(self.program, budget, tape=tau)
        if ex.status == "blocked":
            self._exact[tau] = ex
        else:
            self._shared[tau[: ex.reads]] = ex
            if ex.reads not in self._widths:
                self._widths.append(ex.reads)
                self._widths.sort(reverse=True)
        return ex

    def probe(self, tau: Sequence[int], steps: int) -> tuple[tuple[int, ...], bool]:
        """(output within ``steps``, whether the run asked for more input by then)."""
        tau = tuple(tau)
        ex = self._exec(tau, steps)
        bits = tuple(ex.bits[: bisect_right(ex.emit_steps, steps)])
        wants = ex.status == "blocked" and ex.steps <= steps
        return bits, wants

    def output(self, tau: Sequence[int], steps: int) -> tuple[int, ...]:
        return self.probe(tau, steps)[0]

    def output_len(self, tau: Sequence[int], steps: int) -> int:
        return len(self.probe(tau, steps)[0])

    def settled(self, tau: Sequence[int], steps: int) -> bool:
        """Every extension of tau yields the same output within ``steps``."""
        return not self.probe(tau, steps)[1]

    def to_json(self) -> dict:
        return {"name": self.name, "code": format_program(self.program)}


def gamma_output(gamma: Functional, tau: Sequence[int], steps: int) -> tuple[int, ...]:
    return gamma.output(tau, steps)


def output_set(gamma: Functional, threshold: int, steps: int,
               rho: Sequence[int] | None = None) -> PredicateSet:
    """{tau : |Gamma^tau| >= threshold} (and Gamma^tau extends rho, if given)."""
    rho = None if rho is None else tuple(rho)

    def pred(tau):
        bits = gamma.output(tau, steps)
        if len(bits) < threshold:
            return False
        return rho is None or bits[: len(rho)] == rho

    return PredicateSet(pred, f"S[{gamma.name},{threshold}]",
                        settled=lambda tau: gamma.settled(tau, steps))


# the shipped functional library


def _emit_bits(bits: Iterable[int]) -> str:
    return " ".join(f"PUSH {b & 1} EMIT" for b in bits)


def everywhere_partial() -> Functional:
    return Functional(ToyProgram.parse("JMP 0", "everywhere-partial"), "everywhere-partial")


def copy_parity() -> Functional:
    code = "PUSH 0 DUP READ EMIT PUSH 1 ADD JMP 1"
    return Functional(ToyProgram.parse(code, "copy-parity"), "copy-parity")


def constant_functional(rho: Sequence[int]) -> Functional:
    """Reads tau(0), then emits rho: output rho on every input of length >= 1."""
    code = f"PUSH 0 READ POP {_emit_bits(rho)} PUSH 0 HALT"
    name = "constant[" + "".join(map(str, rho)) + "]"
    return Functional(ToyProgram.parse(code, name), name)


def fixed_emitter(rho: Sequence[int]) -> Functional:
    """Emits rho without reading any input."""
    code = f"{_emit_bits(rho)} PUSH 0 HALT"
    name = "fixed[" + "".join(map(str, rho)) + "]"
    return Functional(ToyProgram.parse(code, name), name)


def use_all_input() -> Functional:
    """Bit i of the output is the parity of tau(0) + ... + tau(i)."""
    code = "PUSH 0 PUSH 0 DUP READ ROT ADD DUP EMIT SWAP PUSH 1 ADD JMP 2"
    return Functional(ToyProgram.parse(code, "use-all-input"), "use-all-input")


def slow_emitter(length: int, delay: int, lead: int = 0) -> Functional:
    """Emits ``length`` zeros, each after a busy loop of ``delay`` rounds; reads nothing.

    ``lead`` adds an initial busy loop before the first bit.
    """
    code = (f"PUSH {lead} DUP JZ 6 PUSH 1 SUB JMP 1 POP "
            f"PUSH {length} DUP JZ 22 PUSH {delay} DUP JZ 16 PUSH 1 SUB JMP 11 "
            f"POP PUSH 0 EMIT PUSH 1 SUB JMP 8 HALT")
    name = f"slow[{length},{delay},{lead}]" if lead else f"slow[{length},{delay}]"
    return Functional(ToyProgram.parse(code, name), name)


def small_trap(cutoff: int, length: int) -> Functional:
    """Scans tau; on the first entry below ``cutoff`` emits ``length`` ones and halts."""
    code = (f"PUSH 0 DUP READ PUSH {cutoff} LT JZ 7 JMP 10 PUSH 1 ADD JMP 1 "
            f"{_emit_bits([1] * length)} PUSH 0 HALT")
    name = f"trap[{cutoff},{length}]"
    return Functional(ToyProgram.parse(code, name), name)


def gated_parity(position: int) -> Functional:
    """Waits for tau(position) and emits its parity, then copies parities from there on."""
    code = f"PUSH {position} DUP READ EMIT PUSH 1 ADD JMP 1"
    name = f"gated-parity[{position}]"
    return Functional(ToyProgram.parse(code, name), name)


def functional_library() -> dict[str, Functional]:
    return {
        "everywhere-partial": everywhere_partial(),
        "copy-parity": copy_parity(),
        "constant": constant_functional((1, 0, 1, 1, 0, 1, 0, 0)),
        "fixed": fixed_emitter((0, 1, 1, 0)),
        "use-all-input": use_all_input(),
    }


def make_functional(name: str, params: dict | None = None) -> Functional:
    """Build a library functional by name, or parse inline toy code (``code:...``)."""
    params = dict(params or {})
    if name.startswith("code:"):
        return Functional(ToyProgram.parse(name[5:], "inline"), "inline")
    builders = {
        "everywhere-partial": lambda: everywhere_partial(),
        "copy-parity": lambda: copy_parity(),
        "use-all-input": lambda: use_all_input(),
        "constant": lambda: constant_functional(tuple(params.get("rho", (1, 0, 1, 1)))),
        "fixed": lambda: fixed_emitter(tuple(params.get("rho", (0, 1, 1, 0)))),
        "slow-emitter": lambda: slow_emitter(int(params.get("length", 6)),
                                             int(params.get("delay", 4)),
                                             int(params.get("lead", 0))),
        "small-trap": lambda: small_trap(int(params.get("cutoff", 1)),
                                         int(params.get("length", 40))),
        "gated-parity": lambda: gated_parity(int(params.get("position", 0))),
    }
    if name not in builders:
        raise KeyError(f"unknown functional {name!r}")
    return builders[name]()
