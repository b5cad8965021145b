"""Command-line entry point: ``saddlebandit <subcommand> ...``.

Exit codes: 0 ok, 2 config/usage error, 3 runtime error, 4 certification failure.
"""

import argparse
import json
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import geometry as geo
from . import metrics as mx
from .config import load_config, parse_set_spec
from .dynamics import run as run_dynamics
from .errors import CertificationError, ConfigError, SaddleBanditError
from .game import make_game
from .norms import dual_norm, norm_context, primal_norm
from .oftrl import audit_tol, init_oftrl, oftrl_step, rvu_audit
from .rounding import build_regularizer, certify_sandwich
from .spanner import build_spanner
from .svg import loglog_chart

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CERT = 0, 2, 3, 4
OUT_ENV = "SADDLEBANDIT_OUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _emit(args, human, payload):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _vector(text):
    try:
        v = json.loads(text) if text.strip().startswith("[") else [float(s) for s in text.split(",")]
        return np.asarray(v, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector {text!r}") from exc


def _seed_range(text):
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError as exc:
        raise ConfigError(f"--seeds expects A..B, got {text!r}") from exc
    if hi < lo:
        raise ConfigError("--seeds range is empty")
    return list(range(lo, hi + 1))


def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             capture_output=True, text=True, timeout=10,
                             cwd=os.path.dirname(os.path.abspath(__file__)))
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def execute_run(loaded, seed, out_root, emit_svg, progress=None) -> dict:
    """Run one seed and write its run directory; returns the summary dict."""
    cfg = loaded.run
    cfg = type(cfg)(**{**cfg.__dict__, "seed": seed})
    stem = os.path.splitext(os.path.basename(loaded.path))[0]
    run_dir = os.path.join(out_root, f"{stem}-seed{seed}")
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.toml"), "w") as fh:
        fh.write(loaded.text)
    trace = run_dynamics(cfg, progress=progress)
    mx.write_csv(os.path.join(run_dir, "phase_log.csv"), mx.PHASE_COLUMNS, trace.phases)
    mx.write_csv(os.path.join(run_dir, "round_log.csv"), mx.ROUND_COLUMNS, trace.rounds)
    info = {"seed": seed, "git_describe": git_describe(), "config_hash": cfg.fingerprint(),
            "config_path": os.path.abspath(loaded.path), "numpy": np.__version__}
    with open(os.path.join(run_dir, "run_info.json"), "w") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
        fh.write("\n")
    summary = mx.write_summary(os.path.join(run_dir, "summary.json"), trace, {"run_dir": run_dir})
    if emit_svg:
        ts = trace.column("t")
        svg = loglog_chart({"average pair": (ts, trace.column("gap_avg")),
                            "last played pair": (ts, trace.column("gap_last"))},
                           title=f"duality gap, seed {seed}")
        with open(os.path.join(run_dir, "gap.svg"), "w") as fh:
            fh.write(svg)
    return summary


def cmd_run(args) -> int:
    loaded = load_config(args.config)
    out_root = args.out or os.environ.get(OUT_ENV) or loaded.out.directory
    seeds = _seed_range(args.seeds) if args.seeds else [args.seed if args.seed is not None
                                                         else loaded.run.seed]
    emit_svg = loaded.out.emit_svg
    if len(seeds) == 1:
        summaries = [execute_run(loaded, seeds[0], out_root, emit_svg)]
    else:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            summaries = list(pool.map(lambda s: execute_run(loaded, s, out_root, emit_svg), seeds))
    lines = [f"seed {s}: final_avg_gap={d['final_avg_gap']:.6g} final_last_gap={d['final_last_gap']:.6g} "
             f"-> {d['run_dir']}" for s, d in zip(seeds, summaries)]
    _emit(args, "\n".join(lines), summaries if len(summaries) > 1 else summaries[0])
    return EXIT_OK


def _set_from_args(args):
    if args.set:
        return parse_set_spec(args.set)
    if args.config:
        loaded = load_config(args.config)
        return loaded.run.setX if args.player == "x" else loaded.run.setY
    raise ConfigError("give --set DESCRIPTOR or --config PATH")


def cmd_spanner(args) -> int:
    cset = _set_from_args(args)
    d = build_spanner(cset)
    ok = d.certified_bound <= d.design_bound
    payload = {"points": d.points.tolist(), "V": d.V.tolist(), "certified_bound": d.certified_bound,
               "design_bound": d.design_bound, "swaps": d.swaps, "ok": ok}
    human = "\n".join([
        f"set: {cset.kind} dim={cset.dim}",
        "points:", *[f"  {np.array2string(p, precision=6)}" for p in d.points],
        "V:", np.array2string(d.V, precision=6),
        f"certified_bound = {d.certified_bound:.6g} (limit 2n^2 = {d.design_bound:g}) {'OK' if ok else 'FAIL'}",
    ])
    _emit(args, human, payload)
    return EXIT_OK if ok else EXIT_CERT


def cmd_ellipsoid(args) -> int:
    cset = _set_from_args(args)
    reg = build_regularizer(cset, certify=False)
    rep = certify_sandwich(reg, cset)
    payload = {"H": reg.H.tolist(), "alpha_eff": reg.alpha_eff, "source": reg.source, **rep}
    human = "\n".join([
        f"set: {cset.kind} dim={cset.dim} ({reg.source})",
        "H:", np.array2string(reg.H, precision=6),
        f"alpha_eff = {reg.alpha_eff:.6g} (cap sqrt(d(d+1)) = {rep['alpha_cap']:.6g})",
        f"vertex max v^T H v = {rep['vertex_max']:.6g}, inner ratio = {rep['inner_ratio']:.6g}",
        f"sandwich {'OK' if rep['ok'] else 'FAIL'}",
    ])
    _emit(args, human, payload)
    return EXIT_OK if rep["ok"] else EXIT_CERT


def cmd_norms(args) -> int:
    cset = _set_from_args(args)
    z = _vector(args.vector)
    ctx = norm_context(cset)
    dn = dual_norm(ctx, z)
    pn = primal_norm(ctx, z) if ctx.supports_primal else None
    payload = {"vector": z.tolist(), "dual_norm": dn, "primal_norm": pn}
    pn_text = f"{pn:.12g}" if pn is not None else "unavailable"
    _emit(args, f"dual norm = {dn:.12g}\nprimal norm = {pn_text}", payload)
    return EXIT_OK


def cmd_gap(args) -> int:
    if args.config:
        loaded = load_config(args.config)
        setX, setY, A = loaded.run.setX, loaded.run.setY, loaded.run.A
    else:
        if not (args.set_x and args.set_y and args.matrix):
            raise ConfigError("give --config or all of --set-x, --set-y, --matrix")
        setX, setY = parse_set_spec(args.set_x), parse_set_spec(args.set_y)
        try:
            A = np.asarray(json.loads(args.matrix), dtype=float)
        except ValueError as exc:
            raise ConfigError(f"--matrix: {exc}") from exc
    game = make_game(setX, setY, A)
    x, y = _vector(args.x), _vector(args.y)
    if not (geo.membership(setX, x, 1e-8) and geo.membership(setY, y, 1e-8)):
        raise ConfigError("x and y must be feasible points of their sets")
    g = mx.duality_gap(game, x, y)
    _emit(args, f"duality gap = {g:.12g} (payoff scale {game.scale:.6g})",
          {"gap": g, "scale": game.scale})
    return EXIT_OK


def rvu_suite(trials=100, T=100, seed=0, sets=None):
    """Random utility sequences with dual norm <= 1; returns per-set min slack and tolerance."""
    sets = sets or [geo.simplex(3), geo.box(-np.ones(3), np.ones(3)), geo.ball(np.zeros(3), 1.0)]
    rng = np.random.default_rng(seed)
    results = []
    for cset in sets:
        reg = build_regularizer(cset)
        ctx = norm_context(cset)
        worst, worst_tol = np.inf, 0.0
        for _ in range(trials):
            st = init_oftrl(reg, cset, audit=True)
            for _ in range(T):
                u = rng.standard_normal(cset.dim)
                u /= max(dual_norm(ctx, u), 1e-300)
                oftrl_step(st, u, reg, cset)
            comp = geo.lmo(cset, st.cum_utility)
            slack = rvu_audit(st.history, comp, reg, ctx, st.eta)
            tol = audit_tol(T, st.max_tol)
            if slack + tol < worst + worst_tol:
                worst, worst_tol = slack, tol
        results.append({"set": cset.kind, "dim": cset.dim, "min_slack": worst, "audit_tol": worst_tol,
                        "ok": worst >= -worst_tol})
    return results


def cmd_rvu_check(args) -> int:
    sets = [parse_set_spec(args.set)] if args.set else None
    res = rvu_suite(args.trials, args.T, args.seed or 0, sets)
    human = "\n".join(f"{r['set']}:{r['dim']} min slack = {r['min_slack']:.6g} "
                      f"(audit_tol {r['audit_tol']:.3g}) {'OK' if r['ok'] else 'FAIL'}" for r in res)
    _emit(args, human, res)
    return EXIT_OK if all(r["ok"] for r in res) else EXIT_CERT


def build_parser():
    p = _Parser(prog="saddlebandit", description="Uncoupled bandit dynamics for bilinear games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--seed", type=int, default=None)
        return sp

    r = common(sub.add_parser("run", help="run the dynamics from a config file"))
    r.add_argument("--config", required=True)
    r.add_argument("--seeds", help="seed sweep A..B (inclusive)")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--out", help="output root (overrides env and config)")
    r.set_defaults(func=cmd_run)

    for name, fn in (("spanner", cmd_spanner), ("ellipsoid", cmd_ellipsoid), ("norms", cmd_norms)):
        sp = common(sub.add_parser(name))
        sp.add_argument("--set", help="e.g. simplex:5, box:3, ball:2:r=2 or a JSON descriptor")
        sp.add_argument("--config")
        sp.add_argument("--player", choices=("x", "y"), default="x")
        if name == "norms":
            sp.add_argument("--vector", required=True, help="comma list or JSON array")
        sp.set_defaults(func=fn)

    g = common(sub.add_parser("gap"))
    g.add_argument("--config")
    g.add_argument("--set-x")
    g.add_argument("--set-y")
    g.add_argument("--matrix", help="JSON nested list")
    g.add_argument("--x", required=True)
    g.add_argument("--y", required=True)
    g.set_defaults(func=cmd_gap)

    v = common(sub.add_parser("rvu-check"))
    v.add_argument("--set")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--T", type=int, default=100)
    v.set_defaults(func=cmd_rvu_check)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (SaddleBanditError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
