"""Command-line driver: ``rogauction {generate,run,expect,verify,sweep}``.

Exit codes: 0 success (all claims hold), 1 internal error, 2 usage or input
error, 3 something was skipped under ``--strict``, 4 a claim failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .errors import BudgetExceeded, InputError
from .expectation import (
    DEFAULT_EXACT_BUDGET,
    PAPER_FAMILY,
    exact_expectation,
    fraction_to_json,
    monte_carlo,
    ratio_sweep,
    resolve_opt,
    sweep_to_csv,
)
from .greedy import TieRule, random_permutation, run_greedy
from .instances import (
    Instance,
    dumps_instance,
    instance_hash,
    load_instance,
    paper_lower_bound_instance,
    paper_opt_bundles,
    random_instance,
)
from .instrumentation import CLAIMS, DEFAULT_VERIFY_BUDGET, annotate_run, verify_instance
from .optimal import DEFAULT_OPT_BUDGET

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_SKIPPED, EXIT_FAILED = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_instance(source: str) -> tuple[Instance, tuple | None]:
    """A JSON path, ``paper:M`` or ``random:n=3,m=5,p=0.5,seed=1``."""
    if source.startswith("paper:"):
        m = int(source.split(":", 1)[1])
        return paper_lower_bound_instance(m), paper_opt_bundles(m)
    if source.startswith("random:"):
        params = dict(kv.split("=", 1) for kv in source.split(":", 1)[1].split(","))
        return (
            random_instance(int(params["n"]), int(params["m"]), float(params["p"]),
                            int(params.get("seed", 0))),
            None,
        )
    return load_instance(source), None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _frac(x: Fraction) -> str:
    return f"{x} ≈ {float(x):.4f}" if x.denominator != 1 else str(x)


# -- subcommands -----------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.family == "paper":
        inst = paper_lower_bound_instance(args.m)
    else:
        inst = random_instance(args.n, args.m, args.p, args.seed)
    _emit(dumps_instance(inst), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    inst, known = _resolve_instance(args.instance)
    rule = TieRule.parse(args.ties)
    if args.perm is not None:
        sigma = args.perm
    else:
        sigma = random_permutation(inst.m, args.seed)
    alloc, trace = run_greedy(inst, sigma, rule)
    report = {
        "tool_version": __version__,
        "instance_hash": instance_hash(inst),
        "tie_rule": str(rule),
        "seed": args.seed if args.perm is None else None,
        "permutation": [s.item for s in trace.steps],
        "bundles": [sorted(b) for b in alloc.bundles],
        "values": [v.value(b) for v, b in zip(inst.valuations, alloc.bundles)],
        "welfare": alloc.welfare,
    }
    records = None
    if args.trace:
        try:
            opt = resolve_opt(inst, args.opt_budget, known)
        except BudgetExceeded as exc:
            print(f"error: --trace needs OPT: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if opt is None:
            print("error: --trace needs OPT, which is over the brute-force budget",
                  file=sys.stderr)
            return EXIT_USAGE
        records = annotate_run(inst, sigma, rule, opt)
        report["opt"] = opt.welfare
        report["trace"] = [r.__dict__ for r in records]
    if args.format == "json":
        _emit(_dump_json(report), args.out)
        return EXIT_OK
    lines = [
        f"instance {report['instance_hash'][:12]}  ties={rule}",
        f"order    {' '.join(map(str, report['permutation']))}",
    ]
    for k, (p, b, v) in enumerate(zip(inst.players, report["bundles"], report["values"])):
        lines.append(f"player {k + 1} ({p.name}): value {v}  items {b}")
    lines.append(f"welfare  {alloc.welfare}")
    if records is not None:
        lines.append(f"OPT      {report['opt']}")
        head = "   t  item  O  C  vO  vC  bO  bC  A  ROG  LOSS  OPT^t"
        lines.append(head)
        for r in records:
            c = "-" if r.competitor is None else r.competitor + 1
            vc = "-" if r.v_comp is None else r.v_comp
            bc = "-" if r.b_comp is None else r.b_comp
            lines.append(
                f"{r.t:4d} {r.item:5d} {r.opt_owner + 1:2d} {c!s:>2} {r.v_opt:3d} {vc!s:>3} "
                f"{r.b_opt:3d} {bc!s:>3} {r.winner + 1:2d} {r.gain:4d} {r.loss:5d} "
                f"{r.opt_residual:6d}"
            )
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_expect(args) -> int:
    inst, known = _resolve_instance(args.instance)
    rule = TieRule.parse(args.ties)
    opt = resolve_opt(inst, args.opt_budget, known)
    if args.mode == "exact":
        rep = exact_expectation(inst, rule, args.exact_budget, opt, args.workers)
    else:
        if args.samples < 2:
            print("error: --samples must be at least 2", file=sys.stderr)
            return EXIT_USAGE
        rep = monte_carlo(inst, rule, args.samples, args.seed, opt, args.workers)
    if args.format == "json":
        _emit(_dump_json(rep.to_dict()), args.out)
    elif args.format == "csv":
        _emit(rep.to_csv(), args.out)
    else:
        lines = [f"mode {rep.mode}  instance {rep.instance_hash[:12]}  ties={rep.tie_rule}"]
        for k, val in enumerate(rep.per_player):
            if rep.mode == "exact":
                lines.append(f"E[v{k + 1}] = {_frac(val)}")
            else:
                lines.append(f"E[v{k + 1}] = {float(val):.4f} ± {rep.per_player_stderr[k]:.4f}")
        if rep.mode == "exact":
            lines.append(f"E[welfare] = {_frac(rep.total)}")
        else:
            lines.append(f"E[welfare] = {float(rep.total):.4f} ± {rep.total_stderr:.4f}")
        if rep.opt_welfare is not None:
            tag = " (certified)" if rep.opt_analytic else ""
            lines.append(f"OPT = {rep.opt_welfare}{tag}")
            r = rep.ratio
            lines.append(f"ratio = {_frac(r)}" if rep.mode == "exact" else f"ratio = {float(r):.4f}")
        if rep.mode == "exact":
            lines.append(f"permutations = {rep.permutations}")
        else:
            lines.append(f"samples = {rep.samples}  seed = {rep.seed}  generator = {rep.generator}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst, known = _resolve_instance(args.instance)
    rule = TieRule.parse(args.ties)
    claims = "all" if args.claims == "all" else [c.strip() for c in args.claims.split(",")]
    reports = verify_instance(
        inst, claims, rule, args.exact_budget, args.opt_budget, args.samples, args.seed, known,
        args.workers,
    )
    if args.format == "json":
        payload = {
            "tool_version": __version__,
            "instance_hash": instance_hash(inst),
            "tie_rule": str(rule),
            "seed": args.seed,
            "claims": [r.to_dict() for r in reports],
        }
        _emit(_dump_json(payload), args.out)
    else:
        lines = [f"{'claim':16s} {'status':15s} {'checked':>8s}  min slack"]
        for r in reports:
            margin = "" if r.margin is None else (
                _frac(r.margin) if isinstance(r.margin, Fraction) else str(r.margin))
            lines.append(f"{r.claim:16s} {r.status:15s} {r.checked:8d}  {margin}")
            if r.witness:
                lines.append(f"  witness: {json.dumps(r.witness)}")
            rev = r.notes.get("reverse_direction")
            if rev:
                lines.append(
                    f"  reverse loss inequality holds on {len(rev['holds_items'])}"
                    f"/{len(rev['applicable_items'])} applicable items"
                )
        _emit("\n".join(lines) + "\n", args.out)
    if any(r.status == "fails" for r in reports):
        return EXIT_FAILED
    if args.strict and any(r.status == "skipped" for r in reports):
        return EXIT_SKIPPED
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.m_list:
        print("error: --m-list is empty", file=sys.stderr)
        return EXIT_USAGE
    rows = ratio_sweep(
        PAPER_FAMILY, args.m_list, args.mode, args.samples, args.seed, args.exact_budget,
        args.opt_budget, args.workers,
    )
    _emit(sweep_to_csv(rows), args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rogauction", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, budgets=True):
        p.add_argument("--ties", default="lowest", help="'lowest' or 'random:SEED'")
        p.add_argument("--out", help="write output here instead of stdout")
        if budgets:
            p.add_argument("--opt-budget", type=int, default=DEFAULT_OPT_BUDGET)

    g = sub.add_parser("generate", help="write an instance file")
    g.add_argument("family", choices=["paper", "random"])
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="one greedy run")
    r.add_argument("instance", help="JSON file, 'paper:M' or 'random:n=..,m=..,p=..,seed=..'")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--perm", type=_int_list, help="comma-separated item order")
    src.add_argument("--seed", type=int, default=0, help="seed for a random order")
    r.add_argument("--trace", action="store_true", help="per-step analysis table (needs OPT)")
    r.add_argument("--format", choices=["table", "json"], default="table")
    common(r)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("expect", help="expected welfare, exact or Monte Carlo")
    e.add_argument("instance")
    e.add_argument("--mode", choices=["exact", "mc"], default="exact")
    e.add_argument("--samples", type=int, default=100_000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--exact-budget", type=int, default=DEFAULT_EXACT_BUDGET)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--format", choices=["table", "json", "csv"], default="table")
    common(e)
    e.set_defaults(func=cmd_expect)

    v = sub.add_parser("verify", help="check the analysis inequalities")
    v.add_argument("instance")
    v.add_argument("--claims", default="all", help=f"'all' or a comma list of {', '.join(CLAIMS)}")
    v.add_argument("--exact-budget", type=int, default=DEFAULT_VERIFY_BUDGET)
    v.add_argument("--samples", type=int, default=2000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--strict", action="store_true", help="exit 3 when a claim was skipped")
    v.add_argument("--format", choices=["table", "json"], default="table")
    common(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="ratio table over the lower-bound family (CSV)")
    s.add_argument("--family", choices=["paper"], default="paper")
    s.add_argument("--m-list", type=_int_list, required=True)
    s.add_argument("--mode", choices=["auto", "exact", "mc"], default="auto")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exact-budget", type=int, default=DEFAULT_EXACT_BUDGET)
    s.add_argument("--opt-budget", type=int, default=DEFAULT_OPT_BUDGET)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, BudgetExceeded, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
