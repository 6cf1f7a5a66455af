"""Command-line interface: ``sss <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import SSSError
from .sampleset import SampleSet


def _params(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise SystemExit(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        for conv in (int, float):
            try:
                value = conv(value)
                break
            except ValueError:
                continue
        out[key.strip()] = value
    return out


def cmd_gen_graph(args) -> int:
    from .graph import generate, save_graph

    g = generate(args.family, args.n, _params(args.param), seed=args.seed)
    save_graph(g, args.out)
    print(f"wrote {args.out}: n={g.n}, edges={g.num_edges}")
    return 0


def cmd_select(args) -> int:
    from . import baselines as bl
    from .design import select_by_design
    from .graph import build_laplacian, load_graph
    from .proposed import heat_kernel_for_selection, select_proposed
    from .spectral import ExactDense, PolySparse, eigendecompose, localization_matrix

    g = load_graph(args.graph)
    L = build_laplacian(g)
    band = min(args.band, g.n)
    m = args.method
    extra = {}
    if m == "proposed":
        kernel = heat_kernel_for_selection(g, args.budget, band, args.nu)
        T = localization_matrix(L, kernel, PolySparse(args.cheb_order, args.drop_tol))
        S = select_proposed(T, args.budget)
    elif m in ("entropy", "mi"):
        cov = bl.covariance_model(L, args.delta)
        S = bl.select_entropy(cov, args.budget) if m == "entropy" else bl.select_mi(cov, args.budget)
    elif m == "maxcutoff":
        S, omega = bl.select_maxcutoff(L, args.budget, args.k)
        extra["omega"] = omega
    elif m == "randsamp":
        S = bl.select_randsamp(bl.randsamp_distribution(eigendecompose(L), band), args.budget, args.seed)
    elif m.startswith("design-"):
        es = eigendecompose(L)
        kernel = heat_kernel_for_selection(g, args.budget, band, args.nu)
        T = localization_matrix(L, kernel, ExactDense(es))
        S = select_by_design(m[-1], T, args.design_k, args.budget)
    else:
        es = eigendecompose(L)
        fn = {
            "minspec": bl.select_minspec,
            "minfrob": bl.select_minfrob,
            "maxfrob": bl.select_maxfrob,
            "maxpvol": bl.select_maxpvol,
            "mintrac": lambda e, b, F: bl.select_mintrac(e, b, F, args.ridge),
        }[m]
        S = fn(es, band, args.budget)
    payload = json.dumps(S.to_dict())
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    for key, value in extra.items():
        print(f"{key} = {value:.17g}", file=sys.stderr)
    return 0


def _read_signal(path) -> np.ndarray:
    values = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.extend(float(tok) for tok in line.replace(",", " ").split())
    return np.asarray(values, dtype=float)


def cmd_reconstruct(args) -> int:
    from .graph import build_laplacian, load_graph
    from .proposed import heat_kernel_for_selection
    from .reconstruction import ReconConfig, recon_bandlimited, recon_locop, recon_localized, recon_regularized
    from .spectral import ExactDense, eigendecompose, localization_matrix

    g = load_graph(args.graph)
    L = build_laplacian(g)
    doc = json.loads(Path(args.samples).read_text(encoding="utf-8"))
    S = SampleSet(tuple(doc["selected"]), int(doc["n"]))
    if S.n != g.n:
        raise SSSError(f"sample set is for n={S.n} but the graph has n={g.n}")
    sig = _read_signal(args.signal)
    if sig.size == g.n:
        f_S, full = sig[S.indices], sig
    elif sig.size == len(S):
        f_S = sig
        full = np.zeros(g.n)
        full[S.indices] = sig
    else:
        raise SSSError(f"signal has {sig.size} values; expected n={g.n} or |S|={len(S)}")
    band = min(args.band, g.n)
    if args.scheme == "bandlimited":
        fhat = recon_bandlimited(eigendecompose(L), band, S, f_S)
    elif args.scheme == "localized":
        padded = np.zeros(g.n)
        padded[S.indices] = f_S
        fhat = recon_localized(eigendecompose(L), band, S, padded)
    elif args.scheme == "locop":
        kernel = heat_kernel_for_selection(g, len(S), band, args.nu)
        T = localization_matrix(L, kernel, ExactDense(eigendecompose(L)))
        fhat = recon_locop(T, args.k, S, f_S)
    else:
        fhat = recon_regularized(L, S, f_S, ReconConfig(k=args.k, gamma=args.gamma))
    text = "".join(f"{v:.17g}\n" for v in fhat)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    from .experiments import load_config, run_from_config

    spec = load_config(args.config)
    written = run_from_config(spec, args.out_dir, progress=lambda msg: print(msg, file=sys.stderr))
    for name, path in written.items():
        print(f"{name}: {path}")
    return 0


def cmd_validate(args) -> int:
    from .design import BOUNDS, run_identity_suite

    results = run_identity_suite(args.n, args.trials, args.seed, args.delta, args.k)
    ok = True
    for which, vals in results.items():
        if which in BOUNDS:
            worst = min(vals)
            passed = worst >= -args.tol
            print(f"{which:10s} min gap      {worst: .3e}  {'PASS' if passed else 'FAIL'}")
        else:
            worst = max(vals)
            passed = worst <= args.tol
            print(f"{which:10s} max residual {worst: .3e}  {'PASS' if passed else 'FAIL'}")
        ok &= passed
    return 0 if ok else 1


METHOD_CHOICES = (
    "proposed", "entropy", "mi", "maxcutoff", "minspec", "mintrac", "minfrob", "maxfrob", "maxpvol",
    "randsamp", "design-a", "design-d", "design-e", "design-t",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sss", description="Sampling set selection for graph signals.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-graph", help="generate a graph and write it as an edge list")
    g.add_argument("--family", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append", help="generator parameter key=value (repeatable)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_graph)

    s = sub.add_parser("select", help="choose a sampling set")
    s.add_argument("--method", required=True, choices=METHOD_CHOICES)
    s.add_argument("--graph", required=True)
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--band", type=int, default=100, help="bandwidth |F| (capped at n)")
    s.add_argument("--nu", type=float, default=220.0)
    s.add_argument("--cheb-order", type=int, default=12)
    s.add_argument("--drop-tol", type=float, default=1e-10)
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--k", type=int, default=14, help="MaxCutoff power")
    s.add_argument("--design-k", type=int, default=12, help="operator power for design-* methods")
    s.add_argument("--ridge", type=float, default=1e-8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    r = sub.add_parser("reconstruct", help="reconstruct a signal from its samples")
    r.add_argument("--scheme", required=True, choices=("bandlimited", "localized", "locop", "regularized"))
    r.add_argument("--graph", required=True)
    r.add_argument("--samples", required=True, help='JSON {"n": N, "selected": [...]}')
    r.add_argument("--signal", required=True, help="one value per line: all n values or the |S| samples")
    r.add_argument("--band", type=int, default=100)
    r.add_argument("--k", type=int, default=12)
    r.add_argument("--gamma", type=float, default=1.0)
    r.add_argument("--nu", type=float, default=220.0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("experiment", help="run an MSE and/or timing experiment from a config file")
    e.add_argument("--config", required=True)
    e.add_argument("--out-dir", required=True)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("validate-identities", help="check the criterion rewrites numerically")
    v.add_argument("--n", type=int, default=12)
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--delta", type=float, default=0.01)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--tol", type=float, default=1e-9)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SSSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
