"""Command line entry point: ``stableconc {bound,sample,verify,asymptote,replay}``.

Exit codes: 0 ok, 1 usage or input error, 2 every point outside validity
(``bound --strict``), 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import deviation_kernel as dk
from . import stable_bounds as sb
from .io import BOUND_HEADER, bound_row, csv_text, fmt, sha256_file, versions, write_atomic, write_json_atomic
from .levy_core import AxisLevySpec, SpecError, StableSpec, truncate
from .mc_verify import LipschitzFunctional, araujo_gine_report, sharpness_report, verify_bound
from .sampler import RngStream, default_workers, sample_spec

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_VIOLATED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which means something else here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_x_grid(x_values, x_range) -> list[float]:
    """Explicit ``--x`` values and/or a geometric ``start:stop:num`` range."""
    xs: list[float] = []
    try:
        for raw in x_values or []:
            xs += [float(v) for v in str(raw).split(",") if v.strip()]
        parts = x_range.split(":") if x_range else []
        if x_range and len(parts) == 3:
            start, stop, num = float(parts[0]), float(parts[1]), parts[2]
    except ValueError as exc:
        raise UsageError(f"bad grid value: {exc}") from exc
    if x_range:
        if len(parts) != 3:
            raise UsageError(f"--x-range must be start:stop:num, got {x_range!r}")
        if not num.isdigit() or int(num) < 2:
            raise UsageError("--x-range needs at least 2 points")
        if not (0 < start < stop):
            raise UsageError("--x-range needs 0 < start < stop")
        xs += [float(v) for v in np.geomspace(start, stop, int(num))]
    if not xs:
        raise UsageError("give --x or --x-range")
    if any(not (x > 0 and math.isfinite(x)) for x in xs):
        raise UsageError("grid points must be positive")
    return xs


def _load_spec(path: str) -> StableSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read spec {path!r}: {exc}") from exc
    return StableSpec.loads(text)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"regime {args.regime} needs {flags}")


def _alpha_lambda(args) -> tuple[float, float]:
    if args.spec:
        spec = _load_spec(args.spec)
        return spec.alpha, spec.lambda_total
    _require(args, "alpha", "lambda_total")
    return args.alpha, args.lambda_total


SLOWLY_VARYING = {
    "one": sb.SlowlyVaryingSpec(lambda x: 1.0, name="one"),
    "log": sb.SlowlyVaryingSpec(lambda x: math.log(math.e + x), name="log(e+x)"),
    "loglog": sb.SlowlyVaryingSpec(lambda x: math.log(math.e + math.log1p(x)), name="log(e+log(1+x))"),
}


def _bound_results(args, xs: list[float]) -> list[sb.BoundResult]:
    regime = args.regime
    if regime == "lemma1":
        _require(args, "R", "V2")
        fn = dk.lemma1_mean_bound if args.center == "mean" else dk.lemma1_median_bound
        consts = {"R": args.R, "V2": args.V2}
        return [sb.BoundResult(x, fn(x, args.R, args.V2), True, "lemma1", consts) for x in xs]
    if regime == "lemma2":
        _require(args, "R", "V2", "W3")
        reg = dk.solve_lemma2_regime(args.R, args.V2, args.W3)
        consts = {"R": reg.R, "V2": reg.V2, "W3": reg.W3, "M": reg.M, "s0": reg.s0, "x0": reg.x0, "K": reg.K}
        return [sb.BoundResult(x, dk.lemma2_bound(x, args.R, args.V2, args.W3, reg), True, "lemma2", consts) for x in xs]
    alpha, lam = _alpha_lambda(args)
    if regime == "generic":
        _require(args, "R")
        spec = dk.GenericIDSpec.truncated_stable(alpha, lam, args.R)
        vals = np.atleast_1d(dk.generic_id_mean_bound(spec, np.asarray(xs)))
        consts = {"R": args.R, "V2": spec.V2, "alpha": alpha, "lambda_total": lam}
        return [sb.BoundResult(x, float(v), True, "generic", consts) for x, v in zip(xs, vals)]
    if regime == "theorem1":
        return [sb.theorem1_bound(x, alpha, lam) for x in xs]
    if regime == "theorem1-general":
        _require(args, "A", "delta")
        params = dk.OptimizerParams(args.A, args.delta)
        return [sb.theorem1_general(x, alpha, lam, params) for x in xs]
    if regime == "theorem2":
        return [sb.theorem2_bound(x, alpha, lam) for x in xs]
    if regime == "theorem3":
        if args.cap is not None:
            dim = args.dim or 1
            lip = sb.compute_a2_for_family(AxisLevySpec(alpha, dim, lam / (2.0 * dim)), args.cap)
        else:
            _require(args, "a2", "c")
            lip = sb.Theorem3Lipschitz(args.a2, args.c)
        return [sb.theorem3_bound(x, alpha, lam, lip, K=args.K) for x in xs]
    if regime == "regvar":
        sv = SLOWLY_VARYING[args.slowly_varying]
        return [sb.regvar_bound(x, alpha, lam, sv) for x in xs]
    raise UsageError(f"unknown regime {regime!r}")


def _output_paths(out: str) -> dict[str, Path]:
    base = Path(out)
    return {"csv": base, "meta": Path(f"{out}.meta.json"), "manifest": Path(f"{out}.manifest.json")}


def _write_manifest(args, command: str, outputs: list[Path], spec: StableSpec | None = None, extra=None) -> Path:
    manifest = {
        "schema_version": 1,
        "command": command,
        "argv": list(args._argv),
        "seed": getattr(args, "seed", None),
        "versions": versions(),
        "spec": spec.to_json() if spec is not None else None,
        "spec_digest": spec.digest() if spec is not None else None,
        "outputs": {p.name: sha256_file(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    path = _output_paths(args.out)["manifest"]
    write_json_atomic(path, manifest)
    return path


def cmd_bound(args) -> int:
    xs = parse_x_grid(args.x, args.x_range)
    results = _bound_results(args, xs)
    text = csv_text(BOUND_HEADER, (bound_row(r) for r in results))
    if args.out:
        path = write_atomic(args.out, text)
        _write_manifest(args, "bound", [path])
    else:
        sys.stdout.write(text)
    if args.strict and not any(r.valid for r in results):
        print("every requested point lies outside the validity region", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    spec = _load_spec(args.spec)
    batch = sample_spec(
        spec, args.n, RngStream(args.seed, args.stream_index), generator=args.generator,
        workers=args.workers, R=args.R,
    )
    header = [f"x{k + 1}" for k in range(batch.dim)]
    text = csv_text(header, ([fmt(v) for v in row] for row in batch.data.tolist()))
    paths = _output_paths(args.out)
    write_atomic(paths["csv"], text)
    sidecar = dict(batch.sidecar(), spec_digest=batch.spec_digest, R=args.R)
    write_json_atomic(paths["meta"], sidecar)
    _write_manifest(args, "sample", [paths["csv"], paths["meta"]], spec)
    print(f"wrote {batch.n} x {batch.dim} variates ({batch.generator}) to {paths['csv']}")
    return EXIT_OK


def _functional(args, dim: int) -> LipschitzFunctional:
    name = args.functional
    u = tuple(float(v) for v in args.u.split(",")) if args.u else None
    if name == "identity":
        if dim != 1:
            raise UsageError("identity needs a one-dimensional spec; use linear with --u")
        return LipschitzFunctional.identity()
    if name == "norm":
        return LipschitzFunctional("euclidean_norm")
    if name == "coord-min":
        return LipschitzFunctional("coord_min")
    if name == "capped-l1":
        return LipschitzFunctional("capped_l1_family", cap=args.cap if args.cap is not None else 1.0)
    if u is None:
        raise UsageError(f"functional {name} needs --u")
    if name == "linear":
        return LipschitzFunctional("linear", u=u)
    if name == "halfspace":
        return LipschitzFunctional("dist_to_halfspace", u=u, t=args.t)
    raise UsageError(f"unknown functional {name!r}")


TAIL_HEADER = ["x", "p_hat", "p_lo", "p_hi", "bound", "valid", "verdict"]


def cmd_verify(args) -> int:
    spec = _load_spec(args.spec)
    xs = parse_x_grid(args.x, args.x_range)
    functional = _functional(args, spec.dim)
    report = verify_bound(
        spec, functional, args.theorem, xs, args.n, RngStream(args.seed, args.stream_index),
        workers=args.workers, generator=args.generator, bound_scale=args.bound_scale,
    )
    rows = ([fmt(r.x), fmt(r.p_hat), fmt(r.p_lo), fmt(r.p_hi), fmt(r.bound), fmt(r.valid), r.verdict] for r in report.rows)
    text = csv_text(TAIL_HEADER, rows)
    counts = report.verdict_counts()
    summary = (
        f"verify {report.theorem} {report.functional} n={report.n} "
        f"{report.center.kind}={report.center.value:.6g} "
        + " ".join(f"{k}={v}" for k, v in counts.items())
    )
    if args.out:
        path = write_atomic(args.out, text)
        _write_manifest(args, "verify", [path], spec)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_VIOLATED if report.any_violated else EXIT_OK


def cmd_asymptote(args) -> int:
    spec = _load_spec(args.spec)
    xs = parse_x_grid(args.x, args.x_range)
    stream = RngStream(args.seed, args.stream_index)
    if args.mode == "sharpness":
        if spec.dim != 1 or spec.spectral.kind != "atoms" or not spec.spectral.symmetric:
            raise UsageError("sharpness needs a one-dimensional symmetric atom spec")
        rep = sharpness_report(spec.alpha, spec.lambda_total / 2.0, xs, args.n, stream, workers=args.workers)
        header = ["x", "p_hat", "scaled", "scaled_lo", "scaled_hi", "limit", "ratio"]
        rows = ([fmt(v) for v in (r.x, r.p_hat, r.scaled, r.scaled_lo, r.scaled_hi, r.limit, r.ratio)] for r in rep.rows)
        last = rep.rows[-1]
        summary = (
            f"sharpness: x^alpha P(X>=x) at x={last.x:g} is {last.scaled:.6g} "
            f"[{last.scaled_lo:.6g}, {last.scaled_hi:.6g}] vs limit {rep.limit:.6g} "
            f"(ratio {last.ratio:.4f}, {'within' if rep.passed else 'outside'} [0.8, 1.2])"
        )
    else:
        rep = araujo_gine_report(spec, xs, args.n, stream, workers=args.workers, tolerance=args.tolerance)
        names = list(rep.candidates)
        header = ["x", "p_hat", "constant", "constant_lo", "constant_hi"] + names
        rows = (
            [fmt(v) for v in (r.x, r.p_hat, r.constant, r.constant_lo, r.constant_hi)]
            + [fmt(rep.candidates[k]) for k in names]
            for r in rep.rows
        )
        last = rep.rows[-1]
        verdicts = ", ".join(
            f"{k}={rep.candidates[k]:.6g} {'consistent' if rep.consistent[k] else 'INCONSISTENT'}" for k in names
        )
        summary = (
            f"araujo-gine: x^alpha P(|X|>=x) at x={last.x:g} is {last.constant:.6g} "
            f"[{last.constant_lo:.6g}, {last.constant_hi:.6g}]; {verdicts}"
        )
        if rep.discrepancy_flagged:
            summary += "; FLAG: stated norm-tail constant disagrees with simulation"
    text = csv_text(header, rows)
    if args.out:
        path = write_atomic(args.out, text)
        _write_manifest(args, "asymptote", [path], spec)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_replay(args) -> int:
    """Rerun a manifest into a scratch directory and compare output hashes."""
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest!r}: {exc}") from exc
    argv = list(manifest["argv"])
    with tempfile.TemporaryDirectory() as scratch:
        out = Path(scratch) / Path(_flag_value(argv, "--out")).name
        argv = _set_flag(argv, "--out", str(out))
        if manifest.get("spec") is not None:
            spec_path = Path(scratch) / "spec.json"
            spec_path.write_text(json.dumps(manifest["spec"]), encoding="utf-8")
            argv = _set_flag(argv, "--spec", str(spec_path))
        code = main(argv)
        mismatched = []
        for name, digest in manifest["outputs"].items():
            produced = out.parent / name
            if not produced.exists() or sha256_file(produced) != digest:
                mismatched.append(name)
    if mismatched:
        print(f"replay MISMATCH: {', '.join(mismatched)}")
        return EXIT_VIOLATED
    print(f"replay reproduced {len(manifest['outputs'])} output(s) byte-identically (exit {code})")
    return EXIT_OK


def _flag_value(argv: list[str], flag: str) -> str:
    for i, tok in enumerate(argv):
        if tok == flag:
            return argv[i + 1]
        if tok.startswith(flag + "="):
            return tok.split("=", 1)[1]
    raise UsageError(f"manifest argv has no {flag}")


def _set_flag(argv: list[str], flag: str, value: str) -> list[str]:
    out = list(argv)
    for i, tok in enumerate(out):
        if tok == flag:
            out[i + 1] = value
            return out
        if tok.startswith(flag + "="):
            out[i] = f"{flag}={value}"
            return out
    return out + [flag, value]


def _add_grid(p):
    p.add_argument("--x", action="append", help="grid point(s); repeat or comma-separate")
    p.add_argument("--x-range", help="geometric grid start:stop:num")


def _add_mc(p):
    p.add_argument("--spec", required=True, help="StableSpec JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-index", type=int, default=0)
    p.add_argument("--workers", type=int, default=None, help="default: $STABLECONC_THREADS or 1")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stableconc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bound", help="evaluate a tail bound on a grid")
    p.add_argument(
        "--regime", required=True,
        choices=["lemma1", "lemma2", "generic", "theorem1", "theorem1-general", "theorem2", "theorem3", "regvar"],
    )
    p.add_argument("--spec", help="take alpha and lambda_total from a StableSpec file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda-total", type=float)
    _add_grid(p)
    for name in ("R", "V2", "W3", "A", "delta", "a2", "c", "cap"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--dim", type=int, help="dimension for the theorem3 capped family")
    p.add_argument("--K", type=float, default=0.5, help="theorem3 radius constant")
    p.add_argument("--center", choices=["median", "mean"], default="median", help="lemma1 centring")
    p.add_argument("--slowly-varying", choices=sorted(SLOWLY_VARYING), default="log")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sample", help="draw variates to CSV")
    _add_mc(p)
    p.add_argument("--generator", choices=["sas1d", "spectral", "rotinv", "ztail"], required=True)
    p.add_argument("--R", type=float, help="truncation radius for ztail")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="Monte Carlo check of a bound")
    _add_mc(p)
    _add_grid(p)
    p.add_argument("--functional", required=True, choices=["identity", "linear", "norm", "halfspace", "coord-min", "capped-l1"])
    p.add_argument("--u", help="comma-separated unit vector")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--cap", type=float)
    p.add_argument("--theorem", required=True, choices=["theorem1", "theorem2", "theorem3"])
    p.add_argument("--generator", choices=["sas1d", "spectral", "rotinv"])
    p.add_argument("--bound-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("asymptote", help="tail-constant reports")
    _add_mc(p)
    _add_grid(p)
    p.add_argument("--mode", required=True, choices=["sharpness", "araujo-gine"])
    p.add_argument("--tolerance", type=float, default=0.05)
    p.set_defaults(func=cmd_asymptote)

    p = sub.add_parser("replay", help="rerun a manifest and check byte-identical outputs")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    if getattr(args, "workers", None) is None and hasattr(args, "workers"):
        args.workers = default_workers()
    try:
        return args.func(args)
    except (UsageError, SpecError) as exc:
        print(f"stableconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
