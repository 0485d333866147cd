"""Command-line front end: ``optshrink denoise | predict | simulate``.

Exit codes: 0 success, 2 usage or validation error, 1 internal error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from .asymptotics import predict_spike
from .dtransform import MpParams
from .harness import EXPERIMENTS, ExperimentConfig, run_experiment, write_csv, write_sidecar
from .linalg import ValidationError, read_matrix_csv, svd, write_matrix_csv
from .shrinkage import gap_rank, optshrink, reconstruct

log = logging.getLogger("optshrink")


class UsageError(Exception):
    pass


def _build_parser():
    parser = argparse.ArgumentParser(prog="optshrink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("denoise", help="denoise a CSV matrix with OptShrink")
    d.add_argument("--input", required=True, help="CSV matrix; empty cells or NaN mark missing entries")
    d.add_argument("--rank", type=int, help="number of retained components (r-hat)")
    d.add_argument("--output", required=True, help="path for the denoised CSV matrix")
    d.add_argument("--report", help="optional path for the JSON report")
    d.add_argument(
        "--gap-heuristic",
        action="store_true",
        help="choose the rank at the largest relative gap between consecutive singular values "
        "(a convenience heuristic, NOT part of the OptShrink method; --rank then acts as an upper bound)",
    )

    p = sub.add_parser("predict", help="print large-matrix limits for one spike as JSON")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0, help="aspect ratio n/m in (0, 1]")
    p.add_argument("--p", type=float, default=1.0, help="observation probability in (0, 1]")

    s = sub.add_parser("simulate", help="run a Monte-Carlo experiment and write CSV + JSON sidecar")
    s.add_argument("--experiment", required=True, help="one of: " + ", ".join(EXPERIMENTS))
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--m", type=int, default=None, help="defaults to --n")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="CSV path; the sidecar goes next to it with a .json suffix")
    return parser


def _denoise(args):
    try:
        matrix, mask = read_matrix_csv(args.input)
    except (OSError, ValidationError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    factors = svd(matrix)
    q = factors.q
    if args.gap_heuristic:
        rank = gap_rank(factors.values, max_rank=args.rank)
        log.info("gap heuristic selected rank %d", rank)
    elif args.rank is None:
        raise UsageError("--rank is required unless --gap-heuristic is given")
    else:
        rank = args.rank
    if not 1 <= rank < q:
        raise UsageError(f"--rank must satisfy 1 <= rank < {q}")

    report = optshrink(factors, rank)
    for i in report.metadata["poleFlags"]:
        log.warning("component %d is not separated from the noise spectrum; weight set to 0", i)
    if report.metadata["relMseOutOfRange"]:
        log.warning("relative MSE estimate fell outside [0, 1] and was clamped")

    write_matrix_csv(reconstruct(factors, report.weights), args.output)
    if args.report:
        report.metadata["observedFraction"] = float(mask.mean())
        report.metadata["rankSource"] = "gap-heuristic" if args.gap_heuristic else "user"
        with open(args.report, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return 0


def _predict(args):
    pred = predict_spike(args.theta, MpParams(c=args.c, p=args.p))
    json.dump(pred.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _simulate(args):
    if args.experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.experiment!r}; valid: {', '.join(EXPERIMENTS)}")
    config = ExperimentConfig(
        experiment=args.experiment,
        n=args.n,
        m=args.m if args.m is not None else args.n,
        trials=args.trials,
        seed=args.seed,
    )
    rows = run_experiment(config)
    out = Path(args.out)
    write_csv(rows, out)
    write_sidecar(config, rows, out.with_suffix(".json"))
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s", stream=sys.stderr)
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {"denoise": _denoise, "predict": _predict, "simulate": _simulate}[args.command]
    try:
        return handler(args)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
