"""Regenerate src/bushydnc/data/corpus64.txt (the shipped phi_e enumeration)."""
from pathlib import Path

progs = []


def add(code, name):
    progs.append((code, name))


for c in range(8):
    add(f"PUSH {c} HALT", f"const{c}")
add("IN HALT", "identity")
add("IN PUSH 1 ADD HALT", "succ")
add("IN PUSH 2 ADD HALT", "plus2")
add("IN DUP ADD HALT", "double")
add("IN DUP MUL HALT", "square")
add("IN PUSH 1 SUB HALT", "pred")
add("JMP 0", "loop")
add("POP", "crash")
# halt with v if n < t, otherwise diverge
for t, v in [(4, 0), (8, 1), (12, 2), (16, 3), (20, 0), (24, 5), (30, 1), (40, 2)]:
    add(f"IN PUSH {t} LT JZ 6 PUSH {v} HALT JMP 6", f"below{t}->{v}")
# slow countdown from k*n, then halt with c
for k, c in [(1, 0), (2, 1), (4, 2), (8, 3), (16, 0), (32, 1), (64, 4), (128, 2)]:
    add(f"IN PUSH {k} MUL DUP JZ 8 PUSH 1 SUB JMP 3 POP PUSH {c} HALT", f"slow{k}->{c}")
# quadratic countdown, then halt with n mod-free constant
for c in range(4):
    add(f"IN DUP MUL DUP JZ 8 PUSH 1 SUB JMP 3 POP PUSH {c} HALT", f"quad->{c}")
# output n - t truncated
for t in range(1, 9):
    add(f"IN PUSH {t} SUB HALT", f"minus{t}")
# output small function of n
for a in range(2, 6):
    add(f"IN PUSH {a} MUL HALT", f"times{a}")
# halt with 1 iff n < t else halt with 0
for t in range(1, 9):
    add(f"IN PUSH {t} LT HALT", f"lt{t}")
# diverge unless n == 0
add("IN JZ 3 JMP 2 PUSH 7 HALT", "zero-only")
add("IN PUSH 1 SUB JZ 5 JMP 4 PUSH 3 HALT", "le1-only")
add("PUSH 1 JZ 0 JMP 2", "spin")
add("IN IN ADD IN ADD HALT", "triple")
add("IN PUSH 3 ADD PUSH 2 MUL HALT", "affine")
add("IN PUSH 1 LT JZ 6 PUSH 9 HALT PUSH 0 HALT", "iszero9")
add("PUSH 2 PUSH 3 ROT HALT", "crash-rot")
add("IN PUSH 5 SWAP SUB HALT", "5-minus-n")
assert len(progs) == 64, len(progs)

out = Path(__file__).resolve().parents[1] / "src/bushydnc/data/corpus64.txt"
out.write_text("".join(f"{code}  # {name}\n" for code, name in progs))
print(f"wrote {len(progs)} programs to {out}")
