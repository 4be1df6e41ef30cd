"""``qca`` command-line interface.

Exit codes: 0 success, 1 failed check or comparison, 2 parse/schema/flag
error, 3 validation error, 4 resource cap exceeded, 5 unsupported
structure or transpile direction.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import sys

import numpy as np

from . import config as cfgmod
from .classical import BitRow, eca_run
from .exceptions import ConfigParseError, QCAError, UnsupportedStructureError, UsageError
from .state import site_probabilities

KINDS = ("mqca", "cqca", "ctqca")
TWO_HOP = {
    ("ctqca", "mqca"): "ctqca -> cqca -> mqca",
    ("mqca", "ctqca"): "mqca -> cqca -> ctqca",
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def _quantum_trajectory(built, steps):
    return built.model.trajectory(built.initial_state(), steps)


def cmd_run(args) -> int:
    built = cfgmod.build(cfgmod.load_config(args.config))
    steps = built.steps if args.steps is None else args.steps
    if steps < 0:
        raise UsageError("--steps must be non-negative")
    buf = io.StringIO()
    buf.write("step,site,p1\n")
    if built.kind == "eca":
        if args.dump_amplitudes:
            raise UsageError("amplitude dumps are not available for classical rows")
        rows = eca_run(built.config.model.rule, built.initial_row(), steps)
        for t, row in enumerate(rows):
            for i, v in enumerate(row.bits):
                buf.write(f"{t},{i},{_fmt(v)}\n")
    else:
        amps = _quantum_trajectory(built, steps)
        probs = site_probabilities(amps, built.model.lattice_.n_sites)
        for t, row in enumerate(probs):
            for i, p in enumerate(row):
                buf.write(f"{t},{i},{_fmt(p)}\n")
        if args.dump_amplitudes:
            with _output(args.dump_amplitudes) as fh:
                fh.write("step,index,re,im\n")
                for t, vec in enumerate(amps):
                    for j, z in enumerate(vec):
                        fh.write(f"{t},{j},{_fmt(z.real)},{_fmt(z.imag)}\n")
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 0


def cmd_compare(args) -> int:
    a = cfgmod.build(cfgmod.load_config(args.config_a))
    b = cfgmod.build(cfgmod.load_config(args.config_b))
    if a.model.lattice_ != b.model.lattice_:
        raise UsageError(f"lattices differ: {a.model.lattice_.extents} vs {b.model.lattice_.extents}")
    steps = a.steps if args.steps is None else args.steps
    state = a.initial_state()
    n = a.model.lattice_.n_sites
    pa = site_probabilities(a.model.trajectory(state, steps), n)
    pb = site_probabilities(b.model.trajectory(state, steps), n)
    dev = np.max(np.abs(pa - pb), axis=1)
    for t, d in enumerate(dev):
        print(f"step {t} max_deviation {d:.3e}")
    worst = float(dev.max())
    ok = worst <= args.tol
    print(f"max deviation {worst:.3e} tol {args.tol:g} {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_transpile(args) -> int:
    from . import transpile as tr

    src, dst = args.src, args.dst
    if (src, dst) in TWO_HOP:
        raise UnsupportedStructureError(f"{src} -> {dst} is not a direct transpilation; run the two hops "
                                        f"{TWO_HOP[(src, dst)]} instead")
    if src == dst:
        raise UnsupportedStructureError(f"source and target kind are both {src}")
    if (src, dst) == ("cqca", "ctqca") and args.dt is None:
        raise ConfigParseError("cqca -> ctqca needs --dt")
    cfg = cfgmod.load_config(args.config)
    built = cfgmod.build(cfg)
    if built.kind != src:
        raise UsageError(f"--from {src} but the configuration describes a {built.kind} model")
    run = cfg.run.model_dump(exclude_none=True)
    init = cfg.initial_state.model_dump(exclude_none=True)
    model = built.model
    if (src, dst) == ("mqca", "cqca"):
        out = tr.mqca_to_cqca(model)
    elif (src, dst) == ("cqca", "mqca"):
        out = tr.cqca_to_mqca(model)
    elif (src, dst) == ("cqca", "ctqca"):
        out = tr.cqca_to_ctqca(model, args.dt)
        run.pop("dt", None)
        run.pop("order", None)
    else:
        dt = args.dt if args.dt is not None else model.dt
        order = args.order if args.order is not None else model.order
        total_t = args.total_t if args.total_t is not None else dt * cfg.run.steps
        out = tr.ctqca_to_cqca(model, dt, total_t, order)
        run = {"steps": int(round(total_t / dt))}
    report = str(out.certification_)
    text = cfgmod.config_to_yaml(built.model.lattice_, out, init, run,
                                 header=f"{dst} model transpiled from {src}\n{report}")
    with _output(args.out) as fh:
        fh.write(text)
    print(report, file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0 if out.certification_.passed else 1


def cmd_verify(args) -> int:
    from .verify import ALL_CHECKS, run_checks

    built = cfgmod.build(cfgmod.load_config(args.config), strict=False)
    checks = ALL_CHECKS if args.checks is None else tuple(c.strip() for c in args.checks.split(",") if c.strip())
    reports = run_checks(built.model, checks, args.tol, radius=args.radius)
    for r in reports:
        print(r)
    return 0 if all(r.passed for r in reports) else 1


def cmd_eca(args) -> int:
    if args.width < 3:
        raise UsageError("--width must be at least 3")
    row = BitRow.parse(args.row) if args.row else BitRow.single_seed(args.width, args.seed)
    rows = eca_run(args.rule, row, args.steps)
    with _output(args.out) as fh:
        if args.format == "csv":
            fh.write("step,cell,value\n")
            for t, r in enumerate(rows):
                for i, v in enumerate(r.bits):
                    fh.write(f"{t},{i},{int(v)}\n")
        else:
            for r in rows:
                fh.write(r.render() + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qca", description="Simulate, transpile and verify quantum cellular automata.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve a configuration and write per-site |1> probabilities as CSV")
    r.add_argument("config", help="YAML file or preset name (" + ", ".join(cfgmod.PRESETS) + ")")
    r.add_argument("--steps", type=int, help="override run.steps")
    r.add_argument("--out", help="CSV path (default stdout)")
    r.add_argument("--dump-amplitudes", metavar="PATH", help="also write step,index,re,im rows")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="evolve two configurations from the first one's initial state")
    c.add_argument("config_a")
    c.add_argument("config_b")
    c.add_argument("--steps", type=int)
    c.add_argument("--tol", type=float, default=1e-8)
    c.set_defaults(func=cmd_compare)

    t = sub.add_parser("transpile", help="compile a model into another model kind, with certification")
    t.add_argument("--from", dest="src", choices=KINDS, required=True)
    t.add_argument("--to", dest="dst", choices=KINDS, required=True)
    t.add_argument("config")
    t.add_argument("--out", help="target YAML path (default stdout)")
    t.add_argument("--dt", type=float, help="segment length (cqca->ctqca) or Trotter step (ctqca->cqca)")
    t.add_argument("--total-t", type=float, help="evolution time certified for ctqca->cqca")
    t.add_argument("--order", type=int, choices=(1, 2), help="product-formula order for ctqca->cqca")
    t.set_defaults(func=cmd_transpile)

    v = sub.add_parser("verify", help="unitarity, translation, causality and consistency checks")
    v.add_argument("config")
    v.add_argument("--checks", help="comma-separated subset of unitarity,translation,causality,consistency")
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--radius", type=int, help="causality radius (default: the model's light-cone radius)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eca", help="run an elementary cellular automaton")
    e.add_argument("--rule", type=int, default=30)
    e.add_argument("--width", type=int, default=31)
    e.add_argument("--steps", type=int, default=15)
    e.add_argument("--seed", type=int, help="seed cell (default: centre)")
    e.add_argument("--row", help="explicit initial row (0/1 or ./#); overrides --width/--seed")
    e.add_argument("--format", choices=("text", "csv"), default="text")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eca)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QCAError as exc:
        print(f"qca: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
