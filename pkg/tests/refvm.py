"""A second, independently written interpreter for the toy machine.

Semantics as documented for the package VM: one step per instruction except
HALT, values mod 2^64 with SUB truncated at zero, EMIT commits the low bit.
Structured as a table of small handlers rather than one if-chain.
"""
M = 2 ** 64

NAMES = ["PUSH", "POP", "DUP", "SWAP", "ROT", "ADD", "SUB", "MUL",
         "LT", "JZ", "JMP", "IN", "ORC", "READ", "EMIT", "HALT"]


class Crash(Exception):
    pass


class Block(Exception):
    pass


def tokens(text):
    words = text.split()
    out, i = [], 0
    while i < len(words):
        w = words[i]
        if w in ("PUSH", "JZ", "JMP"):
            out.append((w, int(words[i + 1])))
            i += 2
        else:
            out.append((w, None))
            i += 1
    return out


def run(text, budget, n=0, tape=None):
    """Returns (status, value, bits)."""
    prog = tokens(text)
    st, bits = [], []
    pc, used = 0, 0

    def need(k):
        if len(st) < k:
            raise Crash

    try:
        while True:
            if not 0 <= pc < len(prog):
                raise Crash
            name, arg = prog[pc]
            if name == "HALT":
                need(1)
                return "halted", st[-1], bits
            if used == budget:
                return "running", None, bits
            used += 1
            nxt = pc + 1
            if name == "PUSH":
                st.append(arg % M)
            elif name == "POP":
                need(1); st.pop()
            elif name == "DUP":
                need(1); st.append(st[-1])
            elif name == "SWAP":
                need(2); st[-2:] = st[-2:][::-1]
            elif name == "ROT":
                need(3); st.append(st.pop(len(st) - 3))
            elif name in ("ADD", "SUB", "MUL", "LT"):
                need(2)
                b, a = st.pop(), st.pop()
                st.append({"ADD": (a + b) % M, "SUB": max(a - b, 0), "MUL": (a * b) % M,
                           "LT": int(a < b)}[name])
            elif name == "JZ":
                need(1)
                if st.pop() == 0:
                    nxt = arg
            elif name == "JMP":
                nxt = arg
            elif name == "IN":
                st.append(n % M)
            elif name == "READ":
                need(1)
                if tape is None:
                    raise Crash
                i = st.pop()
                if i >= len(tape):
                    raise Block
                st.append(tape[i] % M)
            elif name == "EMIT":
                need(1); bits.append(st.pop() % 2)
            else:
                raise Crash
            pc = nxt
    except Crash:
        return "crashed", None, bits
    except Block:
        return "blocked", None, bits
