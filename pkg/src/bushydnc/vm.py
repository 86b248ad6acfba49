"""Deterministic stack machine with an explicit step counter.

Sixteen opcodes. Values are naturals reduced modulo 2**64 (SUB is truncated
at zero). One instruction costs one step; HALT is free, so ``PUSH 7 HALT``
halts within a budget of one step.

A run ends in one of five states:

* ``halted``  -- HALT popped the output value
* ``running`` -- the step budget ran out first
* ``blocked`` -- READ asked for a tape cell past the end of the input string
* ``crashed`` -- stack underflow, bad jump, or falling off the end of the code

``crashed`` runs never halt at any budget, which keeps every observable
monotone in the budget.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

MASK = (1 << 64) - 1

OPCODES = (
    "PUSH", "POP", "DUP", "SWAP", "ROT", "ADD", "SUB", "MUL",
    "LT", "JZ", "JMP", "IN", "ORC", "READ", "EMIT", "HALT",
)
(PUSH, POP, DUP, SWAP, ROT, ADD, SUB, MUL,
 LT, JZ, JMP, IN, ORC, READ, EMIT, HALT) = range(16)
_CODE = {name: i for i, name in enumerate(OPCODES)}
TAKES_ARG = frozenset({PUSH, JZ, JMP})


class ProgramSyntaxError(ValueError):
    pass


class OracleHorizonExceeded(RuntimeError):
    """A program read an oracle bit past the supplied finite prefix."""

    def __init__(self, index: int, horizon: int):
        super().__init__(f"oracle horizon exceeded: read bit {index}, horizon {horizon}")
        self.index = index
        self.horizon = horizon


@dataclass(frozen=True)
class ToyProgram:
    code: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __len__(self) -> int:
        return len(self.code)

    def __str__(self) -> str:
        return format_program(self)

    @classmethod
    def parse(cls, text: str, name: str = "") -> "ToyProgram":
        return cls(parse_code(text), name=name)


def parse_code(text: str) -> tuple[tuple[int, int], ...]:
    toks = text.split("#", 1)[0].split()
    code = []
    i = 0
    while i < len(toks):
        word = toks[i].upper()
        if word not in _CODE:
            raise ProgramSyntaxError(f"unknown mnemonic {toks[i]!r}")
        op = _CODE[word]
        arg = 0
        if op in TAKES_ARG:
            if i + 1 >= len(toks):
                raise ProgramSyntaxError(f"{word} needs an argument")
            try:
                arg = int(toks[i + 1])
            except ValueError:
                raise ProgramSyntaxError(f"bad argument {toks[i + 1]!r} for {word}") from None
            if arg < 0:
                raise ProgramSyntaxError(f"negative argument for {word}")
            i += 1
        code.append((op, arg))
        i += 1
    return tuple(code)


def format_program(program: ToyProgram) -> str:
    out = []
    for op, arg in program.code:
        out.append(f"{OPCODES[op]} {arg}" if op in TAKES_ARG else OPCODES[op])
    return " ".join(out)


@dataclass
class Execution:
    status: str
    steps: int
    value: int | None = None
    bits: list[int] = field(default_factory=list)
    emit_steps: list[int] = field(default_factory=list)
    block_index: int | None = None
    reads: int = 0  # one past the largest tape index read

    @property
    def final(self) -> bool:
        """True when a larger budget cannot change the outcome."""
        return self.status != "running"


def execute(
    program: ToyProgram | Sequence[tuple[int, int]],
    steps: int,
    *,
    n: int = 0,
    tape: Sequence[int] | None = None,
    oracle: Sequence[int] | None = None,
) -> Execution:
    code = program.code if isinstance(program, ToyProgram) else program
    size = len(code)
    stack: list[int] = []
    bits: list[int] = []
    emit_steps: list[int] = []
    pc = 0
    used = 0
    reads = 0
    while True:
        if pc >= size:
            return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
        op, arg = code[pc]
        if op == HALT:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            return Execution("halted", used, stack[-1], bits, emit_steps, reads=reads)
        if used >= steps:
            return Execution("running", used, bits=bits, emit_steps=emit_steps, reads=reads)
        used += 1
        pc += 1
        if op == PUSH:
            stack.append(arg & MASK)
        elif op == JMP:
            pc = arg
        elif op == JZ:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            if stack.pop() == 0:
                pc = arg
        elif op == DUP:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            stack.append(stack[-1])
        elif op == IN:
            stack.append(n & MASK)
        elif op == EMIT:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            bits.append(stack.pop() & 1)
            emit_steps.append(used)
        elif op == READ:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            idx = stack.pop()
            if tape is None:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            if idx >= len(tape):
                return Execution("blocked", used, bits=bits, emit_steps=emit_steps, block_index=idx,
                                 reads=reads)
            stack.append(tape[idx] & MASK)
            if idx >= reads:
                reads = idx + 1
        elif op == POP:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            stack.pop()
        elif op == ORC:
            if not stack:
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            idx = stack.pop()
            if oracle is None or idx >= len(oracle):
                raise OracleHorizonExceeded(idx, 0 if oracle is None else len(oracle))
            stack.append(oracle[idx] & 1)
        else:
            # binary and stack-shuffling ops
            if len(stack) < (3 if op == ROT else 2):
                return Execution("crashed", used, bits=bits, emit_steps=emit_steps)
            if op == SWAP:
                stack[-1], stack[-2] = stack[-2], stack[-1]
            elif op == ROT:
                a = stack.pop(-3)
                stack.append(a)
            else:
                b = stack.pop()
                a = stack.pop()
                if op == ADD:
                    stack.append((a + b) & MASK)
                elif op == SUB:
                    stack.append(a - b if a > b else 0)
                elif op == MUL:
                    stack.append((a * b) & MASK)
                else:  # LT
                    stack.append(1 if a < b else 0)


def enumerate_programs(max_len: int, consts: Sequence[int] = (0, 1, 2, 3)) -> Iterator[ToyProgram]:
    """All programs of 1..max_len instructions, shortest first, then lexicographic.

    PUSH ranges over ``consts``; JZ/JMP targets range over ``0..max_len-1``.
    ORC and READ are excluded (they need an oracle or a tape).
    """
    alphabet: list[tuple[int, int]] = []
    for op in range(16):
        if op in (ORC, READ):
            continue
        if op == PUSH:
            alphabet.extend((PUSH, c) for c in consts)
        elif op in (JZ, JMP):
            alphabet.extend((op, t) for t in range(max_len))
        else:
            alphabet.append((op, 0))

    def rec(length: int) -> Iterator[tuple[tuple[int, int], ...]]:
        if length == 0:
            yield ()
            return
        for head in alphabet:
            for tail in rec(length - 1):
                yield (head,) + tail

    for length in range(1, max_len + 1):
        for code in rec(length):
            yield ToyProgram(code)
