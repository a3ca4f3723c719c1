"""Command-line interface.

Exit status: 0 on success, 1 on any error, 2 on selftest failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import conditioning, experiment, io_text, sensing, theory_bounds
from .recovery import RecoveryConfig, recover
from .tensor_core import reconstruct


def _dims(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _cmd_gen(args) -> int:
    model = conditioning.generate_conditioned_model(
        args.dims, args.rank, args.kappa, args.seed, args.spacing)
    io_text.write_cpmodel(args.out, model)
    print(f"wrote {args.out}")
    return 0


def _cmd_kappa(args) -> int:
    report = conditioning.kappa(io_text.read_cpmodel(args.model))
    print(f"status={report.status}")
    print(f"kappa={_fmt(report.kappa)}")
    print(f"sigma_max_product={_fmt(report.sigma_max_product)}")
    print(f"sigma_min_kr={_fmt(report.sigma_min_kr)}")
    if report.cond_product_bound is not None:
        print(f"cond_product_bound={_fmt(report.cond_product_bound)}")
    else:
        print("cond_product_bound=unavailable")
    return 0


def _cmd_sense(args) -> int:
    model = io_text.read_cpmodel(args.model)
    op = sensing.create_operator(args.m, model.shape, args.dist, args.alpha,
                                 args.seed)
    io_text.write_measurements(args.out, sensing.apply(op, reconstruct(model)))
    print(f"wrote {args.out}")
    return 0


def _cmd_recover(args) -> int:
    y = io_text.read_measurements(args.y)
    op = sensing.create_operator(args.m, args.shape, args.dist, args.alpha,
                                 args.op_seed)
    config = RecoveryConfig(rank=args.rank, max_iters=args.max_iters,
                            restarts=args.restarts, seed=args.seed)
    truth = io_text.read_tensor(args.truth) if args.truth else None
    report = recover(op, y, config, ground_truth=truth)
    io_text.write_cpmodel(args.out, report.model)
    lines = [
        f"objective={_fmt(report.objective)}",
        f"iterations={report.iterations}",
        f"converged={'true' if report.converged else 'false'}",
        f"status={report.status}",
        f"restart_index={report.restart_index}",
    ]
    if report.mse is not None:
        lines.append(f"mse={_fmt(report.mse)}")
    lines.append("trace=" + ",".join(_fmt(v) for v in report.objective_trace))
    text = "\n".join(lines)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_bound(args) -> int:
    inputs = theory_bounds.BoundInputs(dims=args.dims, rank=args.rank,
                                       tau=args.tau, eta=args.eta,
                                       alpha=args.alpha, c=args.C,
                                       delta=args.delta)
    t1 = theory_bounds.theorem1_measurement_bound(inputs)
    print(f"theorem1_bound={_fmt(t1)}")
    print(f"theorem1_suggested_m={math.ceil(t1)}")
    if args.delta is not None:
        p2 = theory_bounds.prop2_measurement_bound(inputs)
        print(f"prop2_bound={_fmt(p2)}")
        print(f"prop2_suggested_m={math.ceil(p2)}")
    return 0


def _cmd_cover(args) -> int:
    value = theory_bounds.covering_log_cardinality(args.dims, args.rank,
                                                   args.tau, args.eps)
    print(f"covering_log_cardinality={_fmt(value)}")
    return 0


def _cmd_rip_probe(args) -> int:
    op = sensing.create_operator(args.m, args.dims, args.dist, args.alpha,
                                 args.op_seed)
    result = theory_bounds.rip_probe(op, args.rank, args.kappa, args.samples,
                                     args.seed)
    print(f"samples={result.samples}")
    print(f"mean_ratio={_fmt(result.mean_ratio)}")
    print(f"min_ratio={_fmt(result.min_ratio)}")
    print(f"max_ratio={_fmt(result.max_ratio)}")
    print(f"delta_hat={_fmt(result.delta_hat)}")
    return 0


def _cmd_experiment(args) -> int:
    config = experiment.load_config(args.config)
    rows, summary = experiment.run_experiment(config)
    rows_path, summary_path = experiment.write_csv(rows, summary, args.out)
    for s in summary:
        print(f"kappa_tilde={_fmt(s.kappa_tilde)} m={s.m} "
              f"successes={s.success_count}/{s.trials}")
    print(f"wrote {rows_path} and {summary_path}")
    if args.plot_script:
        experiment.emit_plot_script(summary_path, args.plot_script)
        print(f"wrote {args.plot_script}")
    return 0


def _cmd_selftest(args) -> int:
    results = experiment.selftest()
    failed = False
    for name, ok in results.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
        failed = failed or not ok
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpsense",
        description="Low-CP-rank tensor compression and recovery toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a conditioned CP model")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spacing", choices=["linear", "log"], default="linear")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("kappa", help="condition number of a CP model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_kappa)

    p = sub.add_parser("sense", help="compress a CP model file")
    p.add_argument("--model", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--dist", choices=[sensing.GAUSSIAN, sensing.RADEMACHER],
                   default=sensing.GAUSSIAN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sense)

    p = sub.add_parser("recover", help="recover a CP model from measurements")
    p.add_argument("--y", required=True)
    p.add_argument("--op-seed", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--shape", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--dist", choices=[sensing.GAUSSIAN, sensing.RADEMACHER],
                   default=sensing.GAUSSIAN)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", default=None,
                   help="optional ground-truth tensor file for MSE")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("bound", help="measurement-count bound calculators")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("cover", help="log covering-number bound")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=_cmd_cover)

    p = sub.add_parser("rip-probe", help="empirical isometry probe")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--dist", choices=[sensing.GAUSSIAN, sensing.RADEMACHER],
                   default=sensing.GAUSSIAN)
    p.add_argument("--op-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=_cmd_rip_probe)

    p = sub.add_parser("experiment", help="run a Monte-Carlo sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV path prefix")
    p.add_argument("--plot-script", default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("selftest", help="fast invariant checks")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI boundary: report, do not traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
