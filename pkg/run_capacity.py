import sys
import json
import logging
import argparse
from typing import Any, Dict, List, Optional, TextIO, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config import config
from sidecap.capacity import calculator
from sidecap.errors import IndeterminateCapacity, InvalidBracket, SidecapError
from sidecap.gaussian_info import to_unit
from sidecap.montecarlo import oracle
from sidecap.optimize import SWEEP_PARAMETERS, sweeper
from sidecap.records import ChannelConfig, OutputRecord, number_token, schema_for

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_INDETERMINATE = 3

DEFAULT_FORMATS = {
    "capacity": "json",
    "rate-curve": "csv",
    "sweep": "csv",
    "verify": "json",
}


class CapacityCommands:
    """Command implementations; each returns (record, exit code)"""

    def __init__(self, out: Optional[TextIO] = None):
        self.out = out or sys.stdout

    def _inputs(self, cfg: ChannelConfig, **extra: Any) -> Dict[str, Any]:
        inputs = cfg.model_dump(exclude={"unit"})
        inputs.update(extra)
        return inputs

    def _rate(self, value: Optional[float], unit: str):
        return None if value is None else number_token(to_unit(value, unit))

    def cmd_capacity(self, cfg: ChannelConfig) -> Tuple[OutputRecord, int]:
        """Capacity, both proof sides, alpha*, and the Costa reference"""
        params = cfg.to_params()
        unit = cfg.unit
        result = calculator.capacity_cd(params)
        receiver_gain, transmitter_loss = calculator.cognition_gain(params)

        alpha_printed = calculator.alpha_printed(params)
        rate_at_printed = None
        if alpha_printed is not None and not params.degenerate:
            rate_at_printed = calculator.rate_rd(params, alpha_printed).rate

        results = {
            "value": self._rate(result.value, unit),
            "achievability": self._rate(result.achievability, unit),
            "converse": self._rate(result.converse, unit),
            "alpha_star": number_token(result.alpha_star),
            "costa": self._rate(calculator.costa_capacity(params.p, params.n), unit),
            "alpha_printed": number_token(alpha_printed),
            "rate_at_alpha_printed": self._rate(rate_at_printed, unit),
            "receiver_gain": self._rate(receiver_gain, unit),
            "transmitter_loss": self._rate(transmitter_loss, unit),
        }
        record = OutputRecord(command="capacity", inputs=self._inputs(cfg), results=results, unit=unit)
        return record, EXIT_OK

    def cmd_rate_curve(self, cfg: ChannelConfig, alpha_lo: float, alpha_hi: float,
                       steps: int) -> Tuple[OutputRecord, int]:
        """R_D(alpha) on an evenly spaced alpha grid"""
        if steps < 2 or not alpha_lo < alpha_hi:
            raise InvalidBracket(f"rate-curve needs alpha_lo < alpha_hi and steps >= 2, "
                                 f"got [{alpha_lo}, {alpha_hi}] with {steps} steps")
        params = cfg.to_params()
        rows = []
        for alpha in np.linspace(alpha_lo, alpha_hi, steps):
            rate = calculator.rate_rd(params, float(alpha)).rate
            rows.append({"alpha": float(alpha), "rate": self._rate(rate, cfg.unit)})

        results = {
            "rows": rows,
            "alpha_star": number_token(calculator.alpha_star(params)),
            "capacity": self._rate(calculator.capacity_cd(params).value, cfg.unit),
        }
        inputs = self._inputs(cfg, alpha_lo=alpha_lo, alpha_hi=alpha_hi, steps=steps)
        return OutputRecord(command="rate-curve", inputs=inputs, results=results, unit=cfg.unit), EXIT_OK

    def cmd_sweep(self, cfg: ChannelConfig, parameter: str, start: float, stop: float, steps: int,
                  family: Optional[Tuple[str, List[float]]] = None) -> Tuple[OutputRecord, int]:
        """Capacity curve(s) over one parameter, optionally one column per family value"""
        if steps < 2 or not start < stop:
            raise InvalidBracket(f"sweep needs from < to and steps >= 2, got [{start}, {stop}] with {steps} steps")
        params = cfg.to_params()
        grid = [float(x) for x in np.linspace(start, stop, steps)]

        if family is None:
            curves = {"capacity": sweeper.sweep_capacity(params, parameter, grid, cfg.unit)}
        else:
            family_parameter, values = family
            by_value = sweeper.sweep_family(params, parameter, grid, family_parameter, values, cfg.unit)
            curves = {f"capacity_{family_parameter}={value:g}": points for value, points in by_value.items()}

        rows = []
        for i, x in enumerate(grid):
            row = {parameter: x}
            for column, points in curves.items():
                row[column] = points[i].token or number_token(points[i].y)
            rows.append(row)

        family_text = None
        if family is not None:
            family_text = f"{family[0]}=" + ",".join(f"{v:g}" for v in family[1])
        inputs = self._inputs(cfg, parameter=parameter, start=start, stop=stop, steps=steps, family=family_text)
        return OutputRecord(command="sweep", inputs=inputs, results={"rows": rows}, unit=cfg.unit), EXIT_OK

    def cmd_verify(self, cfg: ChannelConfig, alpha: Optional[float], n: int, seed: int) -> Tuple[OutputRecord, int]:
        """Closed forms against the Monte Carlo oracle; exit 1 if any check fails"""
        params = cfg.to_params()
        report = oracle.mc_verify(params, alpha, n, seed)

        rows = [
            {
                "name": row.name,
                "closed_form": self._rate(row.closed_form, cfg.unit),
                "estimate": self._rate(row.estimate, cfg.unit),
                "std_error": self._rate(row.std_error, cfg.unit),
                "z_score": number_token(row.z_score),
                "passed": row.passed,
            }
            for row in report.rows
        ]
        results = {"alpha": number_token(report.alpha), "all_passed": report.all_passed, "rows": rows}
        inputs = self._inputs(cfg, samples=n, seed=seed, alpha=number_token(report.alpha))
        record = OutputRecord(command="verify", inputs=inputs, results=results, unit=cfg.unit)
        return record, EXIT_OK if report.all_passed else EXIT_VERIFY_FAILED

    def write(self, record: OutputRecord, fmt: str):
        """Emit a record as JSON or CSV on the output stream"""
        if fmt == "json":
            self.out.write(record.model_dump_json(indent=2) + "\n")
            return

        if "rows" in record.results:
            frame = pd.DataFrame(record.results["rows"])
        else:
            frame = pd.DataFrame([record.results])
        frame["unit"] = record.unit
        frame.to_csv(self.out, index=False, lineterminator="\n")


def parse_family(text: Optional[str]) -> Optional[Tuple[str, List[float]]]:
    """'rho_s2z=0,0.5,0.9' -> ('rho_s2z', [0.0, 0.5, 0.9])"""
    if not text:
        return None
    name, sep, values = text.partition("=")
    if not sep or name not in ("rho_s2z", "rho_xs1"):
        raise ValueError(f"--family must look like rho_s2z=0,0.5,0.9, got {text!r}")
    try:
        return name, [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"--family values must be numbers, got {values!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the channel definition")
    common.add_argument("--p", type=float, help="input power P")
    common.add_argument("--q1", type=float, help="variance of S1")
    common.add_argument("--q2", type=float, help="variance of S2")
    common.add_argument("--n", type=float, help="noise variance N")
    common.add_argument("--rho-xs1", dest="rho_xs1", type=float, help="correlation of X and S1")
    common.add_argument("--rho-s2z", dest="rho_s2z", type=float, help="correlation of S2 and Z")
    common.add_argument("--unit", choices=["bits", "nats"], help="output unit (default from DEFAULT_UNIT)")
    common.add_argument("--format", choices=["json", "csv"], help="output format")
    common.add_argument("--seed", type=int, help="random seed for sampling")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")

    parser = argparse.ArgumentParser(
        prog="run_capacity",
        description="Capacity of the Gaussian channel with correlated two-sided state information",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("capacity", parents=[common], help="capacity, bounds and alpha*")

    curve = commands.add_parser("rate-curve", parents=[common], help="achievable rate against alpha")
    curve.add_argument("--alpha-lo", type=float, default=-1.0)
    curve.add_argument("--alpha-hi", type=float, default=2.0)
    curve.add_argument("--steps", type=int, default=61)

    sweep = commands.add_parser("sweep", parents=[common], help="capacity over one parameter")
    sweep.add_argument("--parameter", choices=SWEEP_PARAMETERS, default="rho_s2z")
    sweep.add_argument("--from", dest="start", type=float, default=0.0)
    sweep.add_argument("--to", dest="stop", type=float, default=0.99)
    sweep.add_argument("--steps", type=int, default=100)
    sweep.add_argument("--family", help="one column per value, e.g. rho_s2z=0,0.5,0.9,0.99")

    verify = commands.add_parser("verify", parents=[common], help="Monte Carlo check of the closed forms")
    verify.add_argument("--alpha", type=float, help="coefficient of U (default alpha*)")

    schema = commands.add_parser("schema", help="print a JSON Schema")
    schema.add_argument("which", choices=["config", "output"])

    return parser


def main(argv: Optional[List[str]] = None, out: Optional[TextIO] = None) -> int:
    """Main entry point for the capacity command line"""
    args = build_parser().parse_args(argv)
    config.setup_logging()
    out = out or sys.stdout

    if not config.validate():
        print("error: invalid environment configuration", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "schema":
        out.write(json.dumps(schema_for(args.which), indent=2) + "\n")
        return EXIT_OK

    commands = CapacityCommands(out)
    fmt = args.format or DEFAULT_FORMATS[args.command]

    try:
        cfg = ChannelConfig.load(
            args.config,
            p=args.p, q1=args.q1, q2=args.q2, n=args.n,
            rho_xs1=args.rho_xs1, rho_s2z=args.rho_s2z, unit=args.unit,
        )

        if args.command == "capacity":
            record, code = commands.cmd_capacity(cfg)
        elif args.command == "rate-curve":
            record, code = commands.cmd_rate_curve(cfg, args.alpha_lo, args.alpha_hi, args.steps)
        elif args.command == "sweep":
            record, code = commands.cmd_sweep(cfg, args.parameter, args.start, args.stop, args.steps,
                                              parse_family(args.family))
        else:
            samples = config.MC_SAMPLES if args.samples is None else args.samples
            seed = config.MC_SEED if args.seed is None else args.seed
            record, code = commands.cmd_verify(cfg, args.alpha, samples, seed)

    except IndeterminateCapacity as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except ValidationError as e:
        first = e.errors()[0]
        print(f"error: {'.'.join(str(part) for part in first['loc'])}: {first['msg']}", file=sys.stderr)
        return EXIT_INVALID
    except (SidecapError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID

    commands.write(record, fmt)
    logger.info(f"{args.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
