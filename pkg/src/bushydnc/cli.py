"""Command-line entry point: ``bushydnc <subcommand> [options]``.

Exit status is 0 when every check passes, 1 when a bound is violated (or an
audited trace is invalid) and 2 on configuration or usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from . import harness
from .computation import ToyEnumeration, default_enumeration
from .dnc import RunTrace, audit_trace, run_bounded_dnc, run_unbounded_dnc
from .growth import GrowthFamily, requirement_threshold
from .kolmogorov import PrefixFreeMachine
from .vm import ToyProgram

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

EXPERIMENTS = {
    "walk": "walk-bound",
    "fireworks": "fireworks-trap",
    "dnc": "dnc-bounded",
    "dnc-unbounded": "dnc-unbounded",
    "lemmas": "lemma-suite",
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment file")
    p.add_argument("--seed", type=int, help="base seed (u64)")
    p.add_argument("--trials", type=int)
    p.add_argument("--sigma", type=float, help="confidence multiplier (default 3)")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bushydnc", description="Bushy-tree forcing experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "walk": "random-walk avoidance against the product bound",
        "fireworks": "fireworks engine on the length-trap family",
        "dnc": "bounded DNC construction",
        "dnc-unbounded": "unbounded DNC construction with assumption lists",
        "lemmas": "randomized property suite for bushy-tree lemmas",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _experiment_flags(p)
        if name.startswith("dnc"):
            p.add_argument("--trace", type=Path, help="write the JSONL trace of trial 0 here")
    p = sub.add_parser("family", help="growth-family table and audits")
    _experiment_flags(p)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--exact", action="store_true", help="exact big-integer mode")
    p.add_argument("--kmax", type=int, default=2)
    p.add_argument("--h0", choices=("succ", "double", "square"))
    p = sub.add_parser("audit", help="re-verify a JSONL run trace")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p = sub.add_parser("diag", help="dump the phi_e(e) diagonal table")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--limit", type=int)
    p.add_argument("--corpus", type=Path, help="corpus file (one program per line)")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


# ---------------------------------------------------------------------------


def load_spec(kind: str, args: argparse.Namespace) -> harness.ExperimentSpec:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        if data.setdefault("kind", kind) != kind:
            raise ConfigError(f"config is for kind {data['kind']!r}, not {kind!r}")
    data["kind"] = kind
    for flag in ("seed", "trials", "sigma", "workers"):
        v = getattr(args, flag, None)
        if v is not None:
            data[flag] = v
    try:
        spec = harness.ExperimentSpec.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_field_errors(exc)) from exc
    try:
        spec.parsed()
    except ValidationError as exc:
        raise ConfigError(_field_errors(exc, prefix=("config",))) from exc
    return spec


def _field_errors(exc: ValidationError, prefix: tuple = ()) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in prefix + tuple(err["loc"])) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "invalid config:\n  " + "\n  ".join(lines)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _summary(report: harness.StatsReport) -> str:
    rows = []
    for c in report.checks:
        rel = {"at_least": ">=", "at_most": "<=", "zero_failures": "=="}[c.direction]
        rows.append(f"{'PASS' if c.passed else 'FAIL'} {report.kind}/{c.name}: "
                    f"{c.successes}/{c.trials} = {c.frequency:.4f} {rel} {c.bound} "
                    f"(margin {c.margin:.4f})")
    return "\n".join(rows)


def _report(report: harness.StatsReport, args) -> int:
    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.out)
    if args.out is not None:
        print(_summary(report))
    return EXIT_PASS if report.passed else EXIT_FAIL


def _write_trace(spec: harness.ExperimentSpec, path: Path) -> None:
    cfg = spec.parsed()
    seed = harness.derive_seed(spec.seed, 0)
    funcs = harness._functionals(cfg.roster)
    enum = default_enumeration()
    if spec.kind == "dnc-bounded":
        family = GrowthFamily(cfg.m, cfg.mode, cfg.k_max, h0=cfg.h0)
        firsts = [r.first_depth for r in cfg.roster]
        tr = run_bounded_dnc(family, funcs, [r.d for r in cfg.roster], enum, cfg.depth,
                             cfg.budgets.budgets(), seed,
                             first_depths=firsts if any(f is not None for f in firsts) else None,
                             caps=cfg.caps)
    else:
        tr = run_unbounded_dnc(funcs, [ToyProgram.parse(r.phi) for r in cfg.roster],
                               [r.d for r in cfg.roster], cfg.m, enum, cfg.depth,
                               cfg.budgets.budgets(), seed, caps=cfg.caps,
                               first_depths=[r.first_depth or 0 for r in cfg.roster])
    path.write_text(tr.to_jsonl())


def _fmt_pow2(v: int) -> str:
    return str(v) if v < 1 << 64 else f"2^{v.bit_length() - 1}"


def cmd_family(args) -> int:
    if not args.exact:
        try:
            fam = GrowthFamily(args.m, "scaled", max(args.kmax, 1), h0=args.h0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        bad = fam.audit(args.kmax)
        _print_family(fam, args.kmax)
        return EXIT_PASS if not bad else EXIT_FAIL
    if args.kmax > 2:
        raise ConfigError("exact mode is limited to --kmax <= 2")
    fam = GrowthFamily(args.m, "exact", args.kmax, h0=args.h0)
    _print_family(fam, args.kmax)
    if args.m > 4 or args.h0 is not None:
        return EXIT_PASS if not fam.audit(args.kmax) else EXIT_FAIL
    if args.config is not None:
        spec = load_spec("family-audit", args)
    else:
        spec = harness.ExperimentSpec(kind="family-audit", trials=1,
                                      config={"m_values": [args.m], "k_max": args.kmax})
    report = harness.run_experiment(spec)
    if args.out is not None:
        _emit(report.to_json() if args.format == "json" else report.to_csv(), args.out)
    print(_summary(report))
    return EXIT_PASS if report.passed else EXIT_FAIL


def _print_family(fam: GrowthFamily, kmax: int) -> None:
    print(f"mode={fam.mode} m={fam.m}")
    header = ["k"] + [f"g_k({i})" for i in range(kmax + 1)] + ["h(k)"]
    print("\t".join(header))
    for k in range(kmax + 1):
        row = [str(k)] + [_fmt_pow2(fam.g(k, i)) for i in range(kmax + 1)]
        row.append(_fmt_pow2(fam.h(k)))
        print("\t".join(row))
    c2 = PrefixFreeMachine.literal_overhead
    ts = [requirement_threshold(k, fam, 0, c2) for k in range(1, kmax + 1)]
    print("threshold(k), K(Gamma)=0: " + ", ".join(
        str(t) if abs(t) < 1 << 64 else f"-2^{(-t).bit_length() - 1}+" for t in ts))


def cmd_audit(args) -> int:
    try:
        trace = RunTrace.from_jsonl(args.trace.read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load trace {args.trace}: {exc}") from exc
    rep = audit_trace(trace, default_enumeration())
    _emit(json.dumps(rep.to_json(), sort_keys=True, indent=1, default=str), args.out)
    return EXIT_PASS if rep.valid else EXIT_FAIL


def cmd_diag(args) -> int:
    if args.corpus is not None:
        try:
            enum = ToyEnumeration.from_corpus_text(args.corpus.read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load corpus {args.corpus}: {exc}") from exc
    else:
        enum = default_enumeration()
    top = len(enum) if args.limit is None else min(args.limit, len(enum))
    table = enum.diagonal(args.steps, top)
    rows = [{"e": e, "value": table.get(e)} for e in range(top)]
    if args.format == "json":
        text = json.dumps({"steps": args.steps, "rows": rows}, indent=1)
    else:
        text = "e,value\n" + "".join(f"{r['e']},{'' if r['value'] is None else r['value']}\n"
                                     for r in rows)
    _emit(text, args.out)
    return EXIT_PASS


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in EXPERIMENTS:
            spec = load_spec(EXPERIMENTS[args.command], args)
            report = harness.run_experiment(spec)
            if getattr(args, "trace", None) is not None:
                _write_trace(spec, args.trace)
            return _report(report, args)
        if args.command == "family":
            return cmd_family(args)
        if args.command == "audit":
            return cmd_audit(args)
        return cmd_diag(args)
    except ConfigError as exc:
        print(f"bushydnc: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
