"""
Command-line interface: delay gains, certification, MSI estimation, simulation and
experiment generation.

Examples:
  python -m msi_cert.main gain 2 3 500
  python -m msi_cert.main certify system.json --hbar 136
  python -m msi_cert.main msi system.json --gain-mode legacy --json
  python -m msi_cert.main generate system.json --N 1000 --dbar 0.005 --bd-scale 0.01 \\
      --output data.csv --disturbance-output disturbance.json
  python -m msi_cert.main msi system.json --mode data --data data.csv --disturbance disturbance.json
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from .config.settings import config
from .core import file_io
from .core.data_analysis import build_qmi, certify_qmi
from .core.delay_core import gain_bundle
from .core.model_analysis import frequency_check, certify_model, is_schur
from .core.models import GAIN_MODES, DataSet, Verdict
from .core.msi_search import data_certifier, model_certifier, search
from .core.simulate import closed_loop, falsify, generate_experiment
from .utils.validation import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CERTIFIED = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERICAL = 4

VERDICT_EXIT = {
    Verdict.CERTIFIED: EXIT_OK,
    Verdict.NOT_CERTIFIED: EXIT_NOT_CERTIFIED,
    Verdict.ASSUMPTION_VIOLATED: EXIT_ASSUMPTION,
    Verdict.NUMERICAL_FAILURE: EXIT_NUMERICAL,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; 2 is reserved for 'not certified'"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, payload: Dict[str, Any], summary: List[str]):
    report = getattr(args, "report", None)
    if report:
        file_io.write_report(report, payload)
    if args.json:
        print(file_io.report_json(payload))
    else:
        for line in summary:
            print(line)


def _analysis_options(parser: argparse.ArgumentParser):
    parser.add_argument("system", help="System JSON with A, B, K (optional hbar)")
    parser.add_argument("--mode", choices=("model", "data"), default="model",
                        help="Certify from the model or from trajectory data (default: %(default)s)")
    parser.add_argument("--gain-mode", choices=GAIN_MODES, default=None,
                        help="Delay gain used in the multiplier (default: config, 'exact')")
    parser.add_argument("--pin-y", action="store_const", const=True, default=None,
                        help="Pin the passivity multiplier Y to 0 (implied by --gain-mode legacy)")
    parser.add_argument("--epsilon", type=float, default=None, help="Strictness margin for the LMIs")
    parser.add_argument("--solver", default=None, help="cvxpy solver name (default: config)")
    parser.add_argument("--data", help="Trajectory CSV (t,x1..xn,u1..um) for --mode data")
    parser.add_argument("--disturbance", help="Disturbance JSON: {dbar, Bd} or {Qd, Sd, Rd, Bd}")
    parser.add_argument("--dbar", type=float, default=None, help="Norm bound on d(t) instead of --disturbance")
    parser.add_argument("--bd-scale", type=float, default=1.0,
                        help="Bd = scale * I when --dbar is given (default: %(default)s)")
    parser.add_argument("--output", dest="report", help="Write the JSON report to this file")


def _load_dataset(args, n: int) -> DataSet:
    if not args.data:
        raise ValidationError("--mode data needs --data")
    states, inputs = file_io.read_trajectory_csv(args.data)
    if states.shape[1] != n:
        raise ValidationError(f"trajectory has {states.shape[1]} states, the controller expects {n}")
    N = inputs.shape[0]
    if args.disturbance:
        disturbance = file_io.load_disturbance(args.disturbance, N, n)
    elif args.dbar is not None:
        disturbance = file_io.disturbance_from_dict(
            {"dbar": args.dbar, "Bd": (args.bd_scale * np.eye(n)).tolist()}, N, n)
    else:
        raise ValidationError("--mode data needs --disturbance or --dbar")
    return DataSet.from_trajectory(states, inputs, disturbance)


def cmd_gain(args) -> int:
    bundles = [gain_bundle(h) for h in args.hbar]
    payload = {"command": "gain", "gains": [b.to_dict() for b in bundles]}
    summary = [f"{'hbar':>6} {'exact':>14} {'frobenius':>14} {'legacy':>14} {'exact/leg':>10} {'frob/leg':>10}"]
    for b in bundles:
        summary.append(
            f"{b.hbar:>6} {b.exact_sq_gain:>14.4f} {b.frobenius_sq_gain:>14.4f} {b.legacy_sq_gain:>14.4f}"
            f" {b.exact_ratio:>10.4f} {b.frobenius_ratio:>10.4f}"
        )
    _emit(args, payload, summary)
    return EXIT_OK


def cmd_certify(args) -> int:
    gain_mode = args.gain_mode or config.get_gain_mode()
    if args.mode == "model":
        model, extras = file_io.load_system(args.system)
        hbar = args.hbar if args.hbar is not None else extras.get("hbar")
        if hbar is None:
            raise ValidationError("no --hbar given and the system file has no 'hbar'")
        certificate = certify_model(model, hbar, gain_mode, args.pin_y, args.solver, args.epsilon)
        payload: Dict[str, Any] = {"command": "certify", "mode": "model", "certificate": certificate.to_dict()}
        if certificate.certified and is_schur(model.closed_loop):
            check = frequency_check(model, hbar, certificate.multipliers.X, certificate.multipliers.Y,
                                     args.grid, gain_mode)
            payload["frequency_check"] = check.to_dict()
    else:
        K, extras = file_io.load_gain(args.system)
        hbar = args.hbar if args.hbar is not None else extras.get("hbar")
        if hbar is None:
            raise ValidationError("no --hbar given and the system file has no 'hbar'")
        dataset = _load_dataset(args, K.shape[1])
        certificate = certify_qmi(build_qmi(dataset), K, hbar, gain_mode, args.pin_y, args.solver, args.epsilon)
        payload = {"command": "certify", "mode": "data", "certificate": certificate.to_dict()}

    summary = [f"hbar={certificate.hbar} gain_mode={gain_mode} mode={args.mode}: {certificate.verdict}"]
    if certificate.diagnostics.get("error"):
        summary.append(f"  {certificate.diagnostics['error']}")
    if "frequency_check" in payload:
        fc = payload["frequency_check"]
        summary.append(f"  frequency grid ({fc['grid_size']} points): holds={fc['holds']}, "
                       f"worst value {fc['worst_value']:.3e} at omega={fc['worst_omega']:.4f}")
    _emit(args, payload, summary)
    return VERDICT_EXIT[certificate.verdict]


def cmd_msi(args) -> int:
    gain_mode = args.gain_mode or config.get_gain_mode()
    if args.mode == "model":
        model, _ = file_io.load_system(args.system)
        certifier = model_certifier(model, gain_mode, args.pin_y, args.solver, args.epsilon)
    else:
        K, _ = file_io.load_gain(args.system)
        qmi = build_qmi(_load_dataset(args, K.shape[1]))
        if not qmi.assumption_ok:
            payload = {"command": "msi", "mode": "data", "qmi": qmi.to_dict()}
            _emit(args, payload, [f"data assumption violated: {qmi.assumption_message}"])
            return EXIT_ASSUMPTION
        certifier = data_certifier(qmi, K, gain_mode, args.pin_y, args.solver, args.epsilon)

    result = search(certifier, args.search, args.cap, args.workers, args.spot_checks)
    certificate = certifier.certificate(result.msi)
    payload = {
        "command": "msi",
        "mode": args.mode,
        "gain_mode": gain_mode,
        "search": result.to_dict(),
        "certificate": certificate.to_dict() if certificate else None,
    }
    if result.msi is None:
        failure = certifier.certificate(1)
        summary = [f"not certified at hbar=1 ({failure.verdict if failure else 'unknown'})"]
        _emit(args, payload, summary)
        return VERDICT_EXIT[failure.verdict] if failure else EXIT_NOT_CERTIFIED

    summary = [f"MSI estimate ({args.mode}, {gain_mode}): {result.msi} after {result.calls} certification calls"]
    if result.cap_exhausted:
        summary.append(f"  cap {result.cap} reached; the true MSI may be larger")
    if result.inconsistent:
        summary.append(f"  warning: {result.message}")
    _emit(args, payload, summary)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model, extras = file_io.load_system(args.system)
    hbar = args.hbar if args.hbar is not None else extras.get("hbar")
    if hbar is None:
        raise ValidationError("no --hbar given and the system file has no 'hbar'")
    result = falsify(model, hbar, args.trials, args.horizon, args.seed, args.workers)
    if args.output:
        x0 = np.ones(model.n) / np.sqrt(model.n)
        states, inputs = closed_loop(model, result.worst_pattern, x0, args.horizon, return_inputs=True)
        file_io.write_trajectory_csv(args.output, states, inputs)
    payload = {"command": "simulate", "falsification": result.to_dict()}
    summary = [
        f"worst growth ||x({result.horizon})||/||x0|| = {result.growth_factor:.6g} "
        f"over {result.trials} patterns with intervals up to {result.hbar}",
        f"  note: {result.note}",
    ]
    _emit(args, payload, summary)
    return EXIT_OK


def cmd_generate(args) -> int:
    model, _ = file_io.load_system(args.system)
    Bd = args.bd_scale * np.eye(model.n)
    experiment = generate_experiment(model, args.N, tuple(args.input_range), args.dbar, Bd, args.seed)
    file_io.write_trajectory_csv(args.output, experiment.states, experiment.inputs)
    if args.disturbance_output:
        file_io.write_report(args.disturbance_output, {"dbar": args.dbar, "Bd": Bd.tolist()})
    payload = {"command": "generate", "experiment": experiment.to_dict(), "output": args.output}
    _emit(args, payload, [f"wrote {experiment.dataset.N} samples to {args.output} (seed {experiment.seed})"])
    return EXIT_OK


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def cmd_config(args) -> int:
    if args.action == "set":
        if not args.key or args.value is None:
            raise ValidationError("config set needs KEY and VALUE")
        setter = {
            "solver": config.set_solver,
            "epsilon": config.set_epsilon,
            "log_level": config.set_log_level,
        }.get(args.key)
        if setter is None:
            config.set(args.key, _parse_value(args.value))
        else:
            setter(args.value)
        config.save_config()
    elif args.action == "reset":
        config.reset_to_defaults()
    payload = config.export_config()
    _emit(args, payload, [f"{key}: {value}" for key, value in payload.items()])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="More logging")
    common.add_argument("--json", action="store_true", help="Print the machine-readable report")

    parser = _Parser(prog="msi_cert", description="Stability certification under aperiodic sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain", parents=[common], help="Delay operator gains per hbar")
    p.add_argument("hbar", type=int, nargs="+")
    p.add_argument("--output", dest="report", help="Write the JSON report to this file")
    p.set_defaults(func=cmd_gain)

    p = sub.add_parser("certify", parents=[common], help="Certify stability for one hbar")
    _analysis_options(p)
    p.add_argument("--hbar", type=int, default=None, help="Sampling interval bound (default: from file)")
    p.add_argument("--grid", type=int, default=None, help="Frequency grid size for the gridded check")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("msi", parents=[common], help="Estimate the maximum sampling interval")
    _analysis_options(p)
    p.add_argument("--search", choices=("linear", "exponential"), default=None,
                   help="Search strategy (default: config, 'exponential')")
    p.add_argument("--cap", type=int, default=None, help="Largest hbar tried (default: config)")
    p.add_argument("--workers", type=int, default=None, help="Concurrent candidates in the linear search")
    p.add_argument("--spot-checks", type=int, default=0,
                   help="Extra certifications below the exponential-search estimate to detect non-monotone answers")
    p.set_defaults(func=cmd_msi)

    p = sub.add_parser("simulate", parents=[common], help="Search for growing trajectories under sampling patterns")
    p.add_argument("system")
    p.add_argument("--hbar", type=int, default=None)
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", help="Write the worst-pattern trajectory as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", parents=[common], help="Generate a noisy open-loop experiment")
    p.add_argument("system")
    p.add_argument("--N", type=int, default=1000, help="Number of samples (default: %(default)s)")
    p.add_argument("--dbar", type=float, default=0.0)
    p.add_argument("--bd-scale", type=float, default=1.0, help="Bd = scale * I (default: %(default)s)")
    p.add_argument("--input-range", type=float, nargs=2, default=[-10.0, 10.0], metavar=("LOW", "HIGH"))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True, help="Trajectory CSV to write")
    p.add_argument("--disturbance-output", help="Also write the disturbance JSON for later analysis")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("config", parents=[common], help="Show or change the configuration")
    p.add_argument("action", choices=("show", "set", "reset"))
    p.add_argument("key", nargs="?")
    p.add_argument("value", nargs="?")
    p.set_defaults(func=cmd_config)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code"""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except (ValidationError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
