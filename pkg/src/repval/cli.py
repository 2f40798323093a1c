"""Command-line front end: ``repval <command> ...``.

Every report is JSON (or CSV with ``--format csv``) carrying a ``manifest``
with the command, its configuration, the seed, the tool version and the
wall-clock time. Exit codes: 0 success, 1 a verification found violations,
2 usage error, 3 budget exceeded, 4 invariant violation in the inputs.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import advice, search
from ._backend import default_threads
from .errors import BudgetExceeded, InvariantViolation, LabelError, SupportViolation, UndefinedState
from .games import (
    ClassicalStrategy,
    CQStrategy,
    QuantumStrategy,
    agreement_repeated_strategy,
    build_agreement_game,
    cqgame_from_json,
    game_from_json,
    game_to_json,
    lift_classical_game,
    lift_quantum_strategy,
    load_json,
    repeat,
    strategy_from_json,
)
from .qit.battery import CHECKS, battery_report, run_battery
from .schemas import validate
from .values import (
    classical_value_bruteforce,
    evaluate_classical,
    evaluate_quantum_strategy,
    ns_value_lp,
    seesaw_lower_bound,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET, EXIT_INVARIANT = 0, 1, 2, 3, 4


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    version: str
    seconds: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a module or worker: command seed -> module -> worker."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, np.uint64)[0] >> 1)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help="write the report here instead of standard output")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")


def _coords(text: str) -> list[int]:
    text = text.strip()
    return [int(v) for v in text.split(",") if v.strip()] if text else []


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="repval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"repval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("value", help="classical, non-signaling or see-saw value of a game")
    p.add_argument("method", choices=("classical", "ns", "seesaw"))
    p.add_argument("game")
    p.add_argument("--dims", type=int, nargs="+", help="see-saw entanglement dimension per player")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("repeat", help="n-fold parallel repetition of a game")
    p.add_argument("game")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", help="strategy for the single game (played in every coordinate) or for G^n")
    p.add_argument("--emit-game", action="store_true", help="include the repeated game JSON")
    _common(p)

    p = sub.add_parser("counterexample", help="agreement game: classical, NS and repeated values")
    p.add_argument("--k", type=int, required=True)
    _common(p)

    p = sub.add_parser("qit-battery", help="seeded inequality sweep over the information-theory facts")
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--checks", nargs="+", choices=sorted(CHECKS))
    _common(p)

    p = sub.add_parser("advice", help="advice-state reductions")
    asub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    a = asub.add_parser("run", help="build, condition, measure, round and play")
    a.add_argument("game")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--strategy", required=True)
    a.add_argument("--condition", default="win-all", help="win-all or win-subset:C (C comma-separated, 0-based)")
    _common(a)

    p = sub.add_parser("search", help="distributed losing-coordinate search")
    ssub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    s = ssub.add_parser("sim", help="simulate the search protocol")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps-prime", type=float, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--losing-fraction", type=float, required=True)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--q", type=int, help="override the number of groups per run")
    s.add_argument("--c-prime", type=float, default=search.DEFAULT_C_PRIME)
    s.add_argument("--answer-bits", type=int, default=1)
    s.add_argument("--mode", choices=("mc", "exact"), default="mc")
    _common(s)

    p = sub.add_parser("protocol-c", help="classical conditioning and the single-game Protocol C")
    p.add_argument("game")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--C", type=int, nargs="*", default=[], dest="coords", help="0-based conditioned coordinates")
    p.add_argument("--mc", action="store_true", help="Monte Carlo instead of exact enumeration")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    return parser


# --------------------------------------------------------------------------
# helpers


def _load_game(path):
    obj = load_json(path)
    if "verification" in obj:
        return cqgame_from_json(obj)
    return game_from_json(obj)


def _load_strategy(path):
    """A strategy JSON, or a value report whose witness is a strategy."""
    obj = load_json(path)
    if "witness" in obj and "type" not in obj:
        obj = obj["witness"]
    return strategy_from_json(obj)


def _quantum_for(g, n, s):
    """A QuantumStrategy for G^n from a strategy for G or for G^n."""
    if isinstance(s, ClassicalStrategy):
        s = QuantumStrategy.from_classical(g if _fits(g, s) else repeat(g, n), s)
    if not isinstance(s, QuantumStrategy):
        raise InvariantViolation("a classical or quantum strategy is required")
    if all(p.shape[:2] == (xd, ad) for p, xd, ad in zip(s.povms, g.inputs, g.outputs)) and n > 1:
        s = s.repeat(n)
    return s.check_game(repeat(g, n))


def _fits(g, s: ClassicalStrategy) -> bool:
    return s.k == g.k and all(t.shape == (xd,) for t, xd in zip(s.tables, g.inputs))


def _classical_for(g, n, s):
    if not isinstance(s, ClassicalStrategy):
        raise InvariantViolation("protocol-c needs a classical strategy")
    if _fits(g, s) and n > 1:
        s = s.repeat(g, n)
    return s.check(repeat(g, n))


def _flatten(obj: Any, prefix: str = "") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list) and not any(isinstance(v, (dict, list)) for v in obj):
        out[prefix.rstrip(".")] = ";".join(str(v) for v in obj)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix.rstrip(".")] = obj
    return out


def to_csv(report: dict) -> str:
    """Tabular reports (a top-level ``rows`` list) become one line per row;
    anything else becomes key,value pairs."""
    buf = io.StringIO()
    rows = report.get("rows")
    if isinstance(rows, list) and rows and all(isinstance(r, dict) for r in rows):
        flat = [_flatten(r) for r in rows]
        fields = list(dict.fromkeys(k for r in flat for k in r))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten({k: v for k, v in report.items() if k != "manifest"}).items():
            w.writerow([k, v])
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


# --------------------------------------------------------------------------
# commands; each returns (report dict, schema name, exit code)


def cmd_value(args):
    g = game_from_json(load_json(args.game))
    if args.method == "classical":
        r = classical_value_bruteforce(g, threads=args.threads)
    elif args.method == "ns":
        r = ns_value_lp(g)
    else:
        dims = args.dims or [2] * g.k
        r = seesaw_lower_bound(g, dims, restarts=args.restarts, seed=derive_seed(args.seed, 1),
                               threads=args.threads)
    out = r.to_json()
    out["game"] = g.name
    return out, "value", EXIT_OK


def cmd_repeat(args):
    g = game_from_json(load_json(args.game))
    gn = repeat(g, args.n)
    out = {"game": g.name, "n": args.n, "inputs": list(gn.inputs), "outputs": list(gn.outputs)}
    if args.strategy:
        s = _load_strategy(args.strategy)
        if isinstance(s, ClassicalStrategy):
            sn = s.repeat(g, args.n) if _fits(g, s) and args.n > 1 else s
            out["strategy_value"] = evaluate_classical(gn, sn.check(gn))
            single = evaluate_classical(g, s) if _fits(g, s) else None
        else:
            sn = _quantum_for(g, args.n, s)
            out["strategy_value"] = evaluate_quantum_strategy(gn, sn)
            single = (evaluate_quantum_strategy(g, s) if isinstance(s, QuantumStrategy)
                      and s.povms[0].shape[0] == g.inputs[0] else None)
        if single is not None:
            out["single_value"] = single
            out["single_value_pow_n"] = single ** args.n
    if args.emit_game:
        out["repeated_game"] = game_to_json(gn)
    return out, "repeat", EXIT_OK


def cmd_counterexample(args):
    k = args.k
    if k < 2:
        raise InvariantViolation("the agreement game needs k >= 2")
    g = build_agreement_game(k)
    c = classical_value_bruteforce(g, threads=args.threads)
    ns = ns_value_lp(g)
    gk = repeat(g, k)
    rep = evaluate_classical(gk, agreement_repeated_strategy(k).check(gk))
    out = {"k": k, "classical": c.value, "ns": ns.value, "repeated_strategy": rep,
           "repeated_inputs": int(np.prod(gk.inputs, dtype=np.int64)),
           "diagnostics": {"classical": c.to_json()["diagnostics"], "ns": ns.to_json()["diagnostics"]}}
    return out, "counterexample", EXIT_OK


def cmd_battery(args):
    results = run_battery(args.cases, derive_seed(args.seed, 2), args.tol, args.checks)
    out = battery_report(results)
    out["rows"] = out.pop("checks")
    return out, "battery", EXIT_OK if out["violations"] == 0 else EXIT_VIOLATION


def cmd_advice(args):
    g = _load_game(args.game)
    s = _load_strategy(args.strategy)
    n = args.n
    cond = args.condition
    if cond == "win-all":
        if isinstance(s, CQStrategy) or not hasattr(g, "predicate"):
            coords = list(range(n))
            adv = _cq_conditioned(g, n, s, coords)
        else:
            adv = advice.condition_win_all(advice.build_psi0(g, n, _quantum_for(g, n, s)))
        play = list(range(n))
    elif cond.startswith("win-subset:"):
        coords = _coords(cond.split(":", 1)[1])
        adv = _cq_conditioned(g, n, s, coords)
        rest = [i for i in range(n) if i not in coords]
        play = rest or list(range(n))
    else:
        raise InvariantViolation(f"unknown condition {cond!r}")
    props = advice.measure_properties(adv).to_json()
    rows = [advice.round_and_play(adv, i).to_json() for i in play]
    out = {"event": adv.event, "n": n, "lambda": adv.lam, "properties": props, "rows": rows,
           "chain_holds": all(r["checks"]["outcome_gap_le_rounding_gap"] and r["checks"]["rounding_gap_le_bound"]
                              for r in rows)}
    return out, "advice", EXIT_OK if out["chain_holds"] else EXIT_VIOLATION


def _cq_conditioned(g, n, s, coords):
    if hasattr(g, "predicate"):  # classical game: lift it and its strategy
        cq = lift_classical_game(g)
        s = lift_quantum_strategy(repeat(g, n), _quantum_for(g, n, s))
        return advice.condition_win_subset_cq(cq, n, s, coords)
    if not isinstance(s, CQStrategy):
        raise InvariantViolation("a CQ game needs a CQ strategy for the repeated game")
    return advice.condition_win_subset_cq(g, n, s, coords)


def cmd_search(args):
    cfg = search.SearchConfig.create(args.n, args.eps_prime, args.eta, c_prime=args.c_prime, q=args.q,
                                     answer_bits=args.answer_bits)
    if not 0 <= args.losing_fraction <= 1:
        raise InvariantViolation("losing fraction must lie in [0, 1]")
    losing = int(round(args.losing_fraction * args.n))
    rng = np.random.default_rng(derive_seed(args.seed, 3))
    loss = np.zeros(args.n, dtype=np.uint8)
    loss[rng.permutation(args.n)[:losing]] = 1
    res = search.protocol_run(loss, cfg, samples=args.samples, seed=derive_seed(args.seed, 4),
                              mode=args.mode, threads=args.threads)
    out = res.to_json(cfg)
    out["config"] = cfg.to_json()
    out["losing"] = losing
    out["reference_T"] = cfg.q * math.sqrt(cfg.m) * (cfg.answer_bits + cfg.index_bits)
    return out, "search", EXIT_OK


def cmd_protocol_c(args):
    g = game_from_json(load_json(args.game))
    s = _classical_for(g, args.n, _load_strategy(args.strategy))
    r = advice.protocol_c_classical(g, args.n, s, args.coords, exact=not args.mc,
                                    samples=args.samples, seed=derive_seed(args.seed, 5))
    out = r.to_json()
    out["C"] = sorted(set(args.coords))
    out["n"] = args.n
    return out, "protocol_c", EXIT_OK


COMMANDS = {"value": cmd_value, "repeat": cmd_repeat, "counterexample": cmd_counterexample,
            "qit-battery": cmd_battery, "advice": cmd_advice, "search": cmd_search,
            "protocol-c": cmd_protocol_c}


def run_command(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help / --version exit 0, errors exit 2
        return int(exc.code or 0)
    if args.threads is None:
        args.threads = default_threads()
    if args.threads < 1:
        print("repval: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    config = {k: v for k, v in vars(args).items() if k not in ("format", "output", "threads")}
    start = time.perf_counter()
    try:
        report, schema, code = COMMANDS[args.command](args)
    except BudgetExceeded as exc:
        print(f"repval: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvariantViolation, LabelError, UndefinedState, SupportViolation) as exc:
        print(f"repval: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"repval: cannot read input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    name = args.command + (f" {args.action}" if getattr(args, "action", None) else "")
    manifest = RunManifest(name, config, config.get("seed"), __version__, time.perf_counter() - start)
    report = _clean(report)
    report["manifest"] = _clean(manifest.to_json())
    validate(report, schema)
    text = to_csv(report) if args.format == "csv" else json.dumps(report, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
