"""Command-line harness: generate code sets, sweep SNR, compare curves, bounds and sensitivity tables.

Exit codes: 0 success, 2 validation error, 3 infeasible Monte Carlo budget.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds, closed_form, report
from . import codeset as cs
from .codeset import Mode
from .errors import BudgetError, GenerationError, ValidationError
from .link_sim import simulate_ser
from .mc_ser import BudgetPolicy, chebyshev_samples, estimate_ser, resolve_policy

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET = 0, 2, 3
EVALUATORS = ("quadrature", "mc", "bound", "simulation")
GENERATORS = ("orthogonal", "equicorr", "random", "circshift")
EQUI_TOL = 1e-9


# -- code-set construction -----------------------------------------------------


def build_codeset(kind, M=None, L=None, eta=None, rho_max=None, seed=0, restarts=50, max_tries=10_000,
                  mode=Mode.QUASI_ORTHOGONAL) -> cs.CodeSet:
    def need(name, value):
        if value is None:
            raise ValidationError(f"generator {kind!r} needs --{name.replace('_', '-')}")
        return value

    if kind == "orthogonal":
        return cs.make_orthogonal(need("M", M), L, mode)
    if kind == "equicorr":
        return cs.make_equicorrelated(need("M", M), need("eta", eta), L, mode)
    if kind == "random":
        return cs.make_random_quasi(need("M", M), L, need("rho_max", rho_max), seed, mode, max_tries)
    if kind == "circshift":
        return cs.make_circular_shift_pm1(need("L", L if L is not None else M), restarts, seed, mode)
    raise ValidationError(f"unknown generator {kind!r}")


def summary(codeset: cs.CodeSet) -> dict:
    g = cs.gram(codeset)
    return {
        "M": codeset.M,
        "L": codeset.L,
        "mode": codeset.mode.value,
        "max_abs_kappa": g.max_abs_offdiag(),
        "mean_abs_kappa": g.mean_abs_offdiag(),
        "min_eigenvalue": g.min_eigenvalue(),
    }


def equicorrelation(codeset: cs.CodeSet):
    """Common off-diagonal Gram value if the set is equi-correlated within 1e-9, else None."""
    k = cs.gram(codeset).kappas()
    if k.size == 0:
        return 0.0
    eta = float(k.mean())
    return eta if np.all(np.abs(k - eta) <= EQUI_TOL) else None


def quadrature_ser(codeset: cs.CodeSet, snr: float) -> float:
    eta = equicorrelation(codeset)
    if eta is None:
        raise ValidationError("quadrature needs an orthogonal or equi-correlated code set; use mc")
    if codeset.mode is Mode.QUASI_BIORTHOGONAL:
        if abs(eta) > EQUI_TOL:
            raise ValidationError("biorthogonal quadrature needs an orthogonal code set; use mc")
        return closed_form.ser_biorthogonal(codeset.M, snr)
    if abs(eta) <= EQUI_TOL:
        return closed_form.ser_orthogonal(codeset.M, snr)
    return closed_form.ser_equicorrelated(codeset.M, eta, snr)


def point_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([int(seed), k]).generate_state(1, np.uint64)[0])


def resolve_evaluators(names, codeset) -> list[str]:
    names = list(names)
    if "auto" in names:
        names.remove("auto")
        base = "quadrature" if equicorrelation(codeset) is not None and (
            codeset.mode is Mode.QUASI_ORTHOGONAL or abs(equicorrelation(codeset)) <= EQUI_TOL) else "mc"
        names = [base, "bound"] + names
    out = []
    for n in names:
        if n not in EVALUATORS:
            raise ValidationError(f"unknown evaluator {n!r}; choose from {', '.join(EVALUATORS)} or auto")
        if n not in out:
            out.append(n)
    if not out:
        raise ValidationError("select at least one evaluator")
    return out


def run_sweep(codeset, grid_db, evaluators, policy: BudgetPolicy, trials: int, seed: int, timing=True,
              workers=1) -> list[report.Row]:
    report.check_grid(grid_db)
    evaluators = resolve_evaluators(evaluators, codeset)
    snrs = [float(report.db_to_linear(d)) for d in grid_db]
    if "mc" in evaluators:
        for d, snr in zip(grid_db, snrs):
            pol = resolve_policy(policy, codeset.M, snr, codeset.mode)
            need = chebyshev_samples(pol)
            if policy.cap is not None and need > policy.cap:
                raise BudgetError(
                    f"MC at {d} dB needs {need} samples (> cap {policy.cap}); Monte Carlo may not be feasible "
                    "here, use the bound evaluator for this SNR range"
                )
    ub = bounds.ub_quasi_biortho if codeset.mode is Mode.QUASI_BIORTHOGONAL else bounds.ub_quasi_ortho
    rows = []
    for k, (d, snr) in enumerate(zip(grid_db, snrs)):
        for method in evaluators:
            t0 = time.perf_counter()
            if method == "quadrature":
                p = quadrature_ser(codeset, snr)
                vals = (p, p, 0.0, 0)
            elif method == "mc":
                e = estimate_ser(codeset, snr, policy, seed=point_seed(seed, k), workers=workers)
                vals = (e.p_e, e.p_e, e.std_err, e.samples_total)
            elif method == "bound":
                raw = ub(codeset, snr)
                vals = (min(raw, 1.0), raw, 0.0, 0)
            else:
                r = simulate_ser(codeset, snr, trials, seed=point_seed(seed, k) ^ 0x5EED, workers=workers)
                vals = (r.p_e_hat, r.p_e_hat, r.std_err, r.trials)
            wall = time.perf_counter() - t0 if timing else 0.0
            rows.append(report.Row(d, method, *vals, wall))
    return rows


def compare_rows(rows_a, rows_b, method_a=None, method_b=None, targets=(1e-4,)):
    def pick(rows, method):
        present = {r.method for r in rows}
        if method:
            if method not in present:
                raise ValidationError(f"method {method!r} not present (have {sorted(present)})")
            return method
        for m in ("mc", "quadrature", "simulation", "bound"):
            if m in present:
                return m
        raise ValidationError("no rows to compare")

    ma, mb = pick(rows_a, method_a), pick(rows_b, method_b)
    ca, cb = report.curve(rows_a, ma), report.curve(rows_b, mb)
    common = sorted(set(ca[0].tolist()) & set(cb[0].tolist()))
    if not common:
        raise ValidationError("the two sweeps share no SNR points (disjoint grids)")
    pa = dict(zip(ca[0].tolist(), ca[1].tolist()))
    pb = dict(zip(cb[0].tolist(), cb[1].tolist()))
    table = []
    for d in common:
        ratio = pb[d] / pa[d] if pa[d] > 0 else math.inf
        table.append({"snr_db": d, "p_e_a": pa[d], "p_e_b": pb[d], "ratio_b_over_a": ratio, "diff_b_minus_a": pb[d] - pa[d]})
    gaps = {t: report.db_gap(ca, cb, t) for t in targets}
    return {"method_a": ma, "method_b": mb, "table": table, "gaps_db": gaps}


def sensitivity_rows(M, grid_db, kappa_values=None, kappa_vec=None):
    rows = []
    vecs = []
    if kappa_vec is not None:
        vecs.append(("codeset", np.asarray(kappa_vec, dtype=float)))
    for kv in kappa_values or []:
        vecs.append((repr(float(kv)), np.full(M * (M - 1) // 2, float(kv))))
    if not vecs:
        vecs.append(("0.0", np.zeros(M * (M - 1) // 2)))
    for d in grid_db:
        snr = float(report.db_to_linear(d))
        for label, k in vecs:
            t = bounds.taylor_sensitivity(M, snr, k)
            rows.append({
                "snr_db": d, "es_n0": snr, "kappa": label, "kappa_sq_norm": t.kappa_sq_norm,
                "p_ub_at_zero": t.p_ub_at_zero, "alpha": t.alpha, "ratio": t.ratio, "ratio_approx": t.ratio_approx,
                "p_ub": bounds.pub_of_kappa(k, M, snr), "second_order": t.prediction,
            })
    return rows


# -- argument parsing ----------------------------------------------------------


def _add_codeset_source(p):
    g = p.add_argument_group("code set")
    g.add_argument("--codeset", help="code-set JSON file")
    g.add_argument("--gen", choices=GENERATORS, help="generate the set in-process instead of loading a file")
    _add_generator_params(g)


def _add_generator_params(g):
    g.add_argument("--M", type=int, dest="M")
    g.add_argument("--L", type=int, dest="L")
    g.add_argument("--eta", type=float)
    g.add_argument("--rho-max", type=float, dest="rho_max")
    g.add_argument("--gen-seed", type=int, default=0, dest="gen_seed", help="generator seed")
    g.add_argument("--restarts", type=int, default=50, help="circshift search restarts")
    g.add_argument("--max-tries", type=int, default=10_000, dest="max_tries", help="PSD rejection cap")


def _add_mode(p):
    p.add_argument("--mode", choices=[m.value for m in Mode], help="override the code-set mode")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quasiortho", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a code set and write it to a file")
    p.add_argument("kind", choices=GENERATORS)
    _add_generator_params(p)
    p.add_argument("--seed", type=int, dest="gen_seed", help="alias for --gen-seed")
    _add_mode(p)
    p.add_argument("--out", "-o", help="output file (default: <kind>.json)")

    for name, helptext in (("sweep", "SER versus SNR with any of the evaluators"), ("bound", "union bound versus SNR")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON file of option values (flags given on the command line win)")
        _add_codeset_source(p)
        _add_mode(p)
        p.add_argument("--snr-db", dest="snr_db", default="0:12:2", help="'start:stop:step' or comma list, in dB")
        if name == "sweep":
            p.add_argument("--evaluators", default="auto", help=f"comma list of {', '.join(EVALUATORS)}, or auto")
            p.add_argument("--delta", type=float, default=0.05)
            p.add_argument("--epsilon", type=float, default=0.1)
            p.add_argument("--cap", type=int, default=10**9, help="maximum MC samples per point")
            p.add_argument("--trials", type=int, default=10**6, help="simulation trials per point")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--no-timing", action="store_true", dest="no_timing",
                           help="write wall_time_s as 0 so reruns are byte-identical")
        p.add_argument("--out", "-o", help="CSV output (default: stdout)")
        p.add_argument("--meta", help="JSON run-metadata output (default: <out>.json when --out is given)")

    p = sub.add_parser("compare", help="per-SNR ratio table and dB gap between two sweep CSVs")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--method-a", dest="method_a")
    p.add_argument("--method-b", dest="method_b")
    p.add_argument("--targets", default="1e-4", help="comma list of p_e targets for the dB gap")
    p.add_argument("--out", "-o", help="JSON report output (default: stdout)")

    p = sub.add_parser("sensitivity", help="second-order sensitivity of the bound to code correlations")
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--codeset", help="take M and the correlations from a code-set file")
    p.add_argument("--kappa", default="", help="comma list of uniform correlation values")
    p.add_argument("--snr-db", dest="snr_db", default="0:20:2")
    p.add_argument("--out", "-o", help="CSV output (default: stdout)")
    return ap


def parse_args(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            cfg = json.loads(Path(cfg_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {cfg_path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        sub = next(a for a in ap._subparsers._group_actions if isinstance(a, argparse._SubParsersAction))
        sp = sub.choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for k, v in cfg.items():
            if isinstance(v, list):
                cfg[k] = ",".join(str(x) for x in v)
        sp.set_defaults(**cfg)
        args = ap.parse_args(argv)
    return args


def _codeset_from_args(args) -> cs.CodeSet:
    if args.codeset and args.gen:
        raise ValidationError("give either --codeset or --gen, not both")
    if args.codeset:
        s = cs.load(args.codeset)
    elif args.gen:
        s = build_codeset(args.gen, args.M, args.L, args.eta, args.rho_max, args.gen_seed, args.restarts,
                          args.max_tries)
    else:
        raise ValidationError("no code set: give --codeset FILE or --gen KIND")
    if getattr(args, "mode", None):
        s = s.with_mode(args.mode)
    return s


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _meta(args, codeset, extra) -> dict:
    import scipy

    cfg = {k: v for k, v in vars(args).items() if k not in ("config",)}
    return {
        "command": args.command,
        "config": cfg,
        "codeset": {"generator": codeset.generator, **summary(codeset)},
        "versions": {"quasiortho": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        **extra,
    }


def cmd_generate(args) -> int:
    s = build_codeset(args.kind, args.M, args.L, args.eta, args.rho_max, args.gen_seed or 0, args.restarts,
                      args.max_tries, args.mode or Mode.QUASI_ORTHOGONAL)
    out = args.out or f"{args.kind}.json"
    cs.save(s, out)
    info = summary(s)
    info["file"] = str(out)
    print(json.dumps(info, indent=2))
    return EXIT_OK


def cmd_sweep(args, evaluators=None) -> int:
    s = _codeset_from_args(args)
    grid = report.parse_snr_grid(args.snr_db)
    if evaluators is None:
        evaluators = [e.strip() for e in args.evaluators.split(",") if e.strip()]
        policy = BudgetPolicy(args.delta, args.epsilon, None, args.cap)
        trials, seed, timing, workers = args.trials, args.seed, not args.no_timing, args.workers
    else:
        policy, trials, seed, timing, workers = BudgetPolicy(), 1, 0, True, 1
    rows = run_sweep(s, grid, evaluators, policy, trials, seed, timing, workers)
    _emit(report.rows_to_text(rows), args.out)
    meta_path = args.meta or (f"{args.out}.json" if args.out else None)
    if meta_path:
        extra = {"evaluators": resolve_evaluators(evaluators, s), "snr_db": grid,
                 "point_seeds": [point_seed(seed, k) for k in range(len(grid))]}
        Path(meta_path).write_text(json.dumps(_meta(args, s, extra), indent=2, default=str) + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        targets = [float(t) for t in args.targets.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"bad --targets {args.targets!r}") from None
    res = compare_rows(report.read_rows(args.file_a), report.read_rows(args.file_b), args.method_a,
                       args.method_b, targets)
    res["gaps_db"] = {repr(t): (None if math.isnan(g) else g) for t, g in res["gaps_db"].items()}
    _emit(json.dumps(res, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    kvec = None
    M = args.M
    if args.codeset:
        s = cs.load(args.codeset)
        kvec = cs.gram(s).kappas()
        M = s.M
    if M is None or M < 2:
        raise ValidationError("sensitivity needs --M >= 2 or --codeset")
    try:
        kvals = [float(k) for k in args.kappa.split(",") if k.strip()]
    except ValueError:
        raise ValidationError(f"bad --kappa {args.kappa!r}") from None
    rows = sensitivity_rows(M, report.parse_snr_grid(args.snr_db), kvals, kvec)
    import csv
    import io

    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "bound":
            return cmd_sweep(args, evaluators=["bound"])
        if args.command == "compare":
            return cmd_compare(args)
        return cmd_sensitivity(args)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValidationError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
