"""``metrickernels`` command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 certification
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import EmpiricalMeasure, mmd, universality_sweep
from .covering import cover_with_budget, greedy_cover
from .embedding import check_q
from .errors import InputFormatError, MetricKernelError, ValidationError
from .fixtures import FIXTURES, default_target, load_fixture
from .formatting import fmt
from .kernel import DEFAULT_PREFIX_CAP, KernelModel, certify, gram, psd_check
from .metric import READERS, load_space
from .scalar import load_kernel_spec

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_CERTIFY = 0, 1, 2, 3


def _space(args):
    if args.fixture:
        return load_fixture(args.fixture), args.fixture
    return load_space(args.space, args.space_kind), str(args.space)


def _kernel(args):
    if args.kernel is None:
        raise ValidationError("--kernel is required for this command")
    return load_kernel_spec(args.kernel)


def _model(args, space, scalar) -> KernelModel:
    if args.mode == "truncation":
        if args.eta is not None or args.centers is not None:
            raise ValidationError("--eta/--centers only apply in covering mode")
        if args.N is None:
            raise ValidationError("truncation mode needs --N")
        return KernelModel.with_truncation(space, scalar, args.N, 2.0 if args.q is None else args.q)
    if args.N is not None:
        raise ValidationError("--N only applies in truncation mode")
    if args.centers is not None:
        if args.q is not None:
            check_q(args.q, args.centers)
        cov = cover_with_budget(space, args.centers, seed=args.cover_seed)
    elif args.eta is not None:
        cov = greedy_cover(space, args.eta, seed=args.cover_seed)
    else:
        raise ValidationError("covering mode needs --eta or --centers")
    return KernelModel.with_covering(space, scalar, cov, args.q)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    space, name = _space(args)
    print(json.dumps({"space": name, "n_points": space.size, "diameter": space.diameter, "valid": True}))
    return EXIT_OK


def cmd_gram(args) -> int:
    space, _ = _space(args)
    model = _model(args, space, _kernel(args))
    g = gram(model)
    report = psd_check(g)
    out = _out_dir(args)
    if args.format == "json":
        (out / "gram.json").write_text(g.to_json())
    else:
        g.to_csv(out / "gram.csv")
    _write_json(out / "psd.json", {**report.to_dict(), "model": model.describe()})
    if not report.passed:
        print(f"error: Gram matrix failed the PSD check (min eigenvalue {fmt(report.min_eigenvalue)})", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_certify(args) -> int:
    space, _ = _space(args)
    model = _model(args, space, _kernel(args))
    report = certify(model, args.prefix, cap=args.prefix_cap)
    _write_json(_out_dir(args) / "certify.json", {**report.to_dict(), "model": model.describe()})
    if not report.passed:
        print(f"certification failed at points {report.failures}", file=sys.stderr)
        return EXIT_CERTIFY
    return EXIT_OK


def _target(args, space, name):
    if args.target is not None:
        try:
            f = np.loadtxt(args.target, delimiter=",", ndmin=1)
        except ValueError as exc:
            raise InputFormatError(f"cannot read target values: {exc}", path=args.target) from None
        return f
    f = default_target(name) if args.fixture else None
    if f is None:
        raise ValidationError("sweep needs --target (no default target for this space)")
    return f


def _grid(args, space):
    if args.grid is not None:
        try:
            return [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError:
            raise ValidationError(f"cannot parse --grid {args.grid!r}") from None
    if args.mode == "truncation":
        return [2, 4, 8, 16]
    return [space.diameter / 2**k for k in range(args.levels)]


def cmd_sweep(args) -> int:
    space, name = _space(args)
    scalar = _kernel(args)
    report = universality_sweep(
        space,
        scalar,
        _target(args, space, name),
        _grid(args, space),
        mode=args.mode,
        q=args.q,
        ridge=args.ridge,
        seed=args.seed,
        cover_seed=args.cover_seed,
        space_id=name,
    )
    out = _out_dir(args)
    report.write(out / "sweep.csv", out / "sweep.json")
    return EXIT_OK


def cmd_mmd(args) -> int:
    space, _ = _space(args)
    model = _model(args, space, _kernel(args))
    value = mmd(model, EmpiricalMeasure.parse(args.mu), EmpiricalMeasure.parse(args.nu))
    print(fmt(value))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metrickernels", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--space", type=Path, help="CSV file describing the metric space")
    src.add_argument("--fixture", choices=sorted(FIXTURES), help="bundled metric space")
    common.add_argument("--space-kind", choices=sorted(READERS), default="matrix")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=0)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--kernel", help="scalar kernel JSON file or inline JSON object")
    model.add_argument("--mode", choices=("covering", "truncation"), default="covering")
    size = model.add_mutually_exclusive_group()
    size.add_argument("--eta", type=float, help="covering radius")
    size.add_argument("--centers", type=int, help="number of covering centers J")
    model.add_argument("--q", type=float, help="decay base (default: interval midpoint or 2)")
    model.add_argument("--N", type=int, help="truncation length")
    model.add_argument("--cover-seed", type=int, help="randomize the first covering center")

    p = sub.add_parser("validate", parents=[common], help="check the metric axioms only")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gram", parents=[common, model], help="write the Gram matrix and PSD report")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("certify", parents=[common, model], help="certify the feature-space error bound")
    p.add_argument("--prefix", type=int, help="diagnostic prefix length (default: automatic)")
    p.add_argument("--prefix-cap", type=int, default=DEFAULT_PREFIX_CAP)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", parents=[common, model], help="ridge-regression refinement sweep")
    p.add_argument("--grid", help="comma-separated eta (covering) or N (truncation) values")
    p.add_argument("--levels", type=int, default=5, help="eta = D/2^k for k < LEVELS when --grid is absent")
    p.add_argument("--target", help="CSV column of target values, one per point")
    p.add_argument("--ridge", type=float, default=1e-6)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mmd", parents=[common, model], help="MMD between two empirical measures")
    p.add_argument("--mu", required=True, help="measure as 'i:w,j:w,...' or 'i,j,...' (uniform)")
    p.add_argument("--nu", required=True)
    p.set_defaults(func=cmd_mmd)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; bad flags are a config failure here
        return EXIT_VALIDATION if exc.code == 2 else exc.code
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MetricKernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
