"""Scalar maximization and capacity sweeps."""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from config import config
from sidecap.errors import (
    IndeterminateCapacity,
    InvalidBracket,
    NonFiniteValue,
    SidecapError,
    SweepPointError,
)
from sidecap.gaussian_info import to_unit
from sidecap.model import ChannelParams

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

SWEEP_PARAMETERS = ("rho_s2z", "rho_xs1", "snr", "snr_db")
INF_TOKEN = "inf"
INDETERMINATE_TOKEN = "indeterminate"


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            raise InvalidBracket(f"Bracket needs finite lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class SweepPoint:
    """One curve sample; y is None when the grid value has no defined capacity"""

    x: float
    y: Optional[float]
    token: Optional[str] = None

    @property
    def value(self) -> Union[float, str]:
        """y, or the token standing in for it"""
        if self.token is not None:
            return self.token
        return self.y


class ScalarMaximizer:
    """Golden-section search for the maximum of a unimodal function, with a parabolic polish"""

    def __init__(self, tol: Optional[float] = None, max_iter: Optional[int] = None):
        self.tol = config.OPTIMIZE_TOL if tol is None else tol
        self.max_iter = config.OPTIMIZE_MAX_ITER if max_iter is None else max_iter

    def _evaluate(self, f: Callable[[float], float], x: float) -> float:
        y = f(x)
        if not math.isfinite(y):
            raise NonFiniteValue(f"Objective returned {y} at x={x}")
        return y

    def maximize(self, f: Callable[[float], float], bracket: Bracket, tol: Optional[float] = None) -> Tuple[float, float]:
        """
        Maximize f on the bracket.

        Args:
            f: continuous function, unimodal on the bracket
            bracket: search interval
            tol: target width of the final interval

        Returns:
            (argmax, max)
        """
        tol = self.tol if tol is None else tol
        if tol <= 0:
            raise ValueError(f"tol must be positive, got {tol}")

        a, b = bracket.lo, bracket.hi
        h = b - a

        # Required steps to achieve tolerance
        steps = 0
        if h > tol:
            steps = min(int(math.ceil(math.log(tol / h) / math.log(INV_PHI))), self.max_iter)

        c = a + INV_PHI_SQUARE * h
        d = a + INV_PHI * h
        yc = self._evaluate(f, c)
        yd = self._evaluate(f, d)

        for _ in range(steps):
            if yc > yd:
                b = d
                d = c
                yd = yc
                h = INV_PHI * h
                c = a + INV_PHI_SQUARE * h
                yc = self._evaluate(f, c)
            else:
                a = c
                c = d
                yc = yd
                h = INV_PHI * h
                d = a + INV_PHI * h
                yd = self._evaluate(f, d)

        candidates = [(yc, c), (yd, d),
                      (self._evaluate(f, bracket.lo), bracket.lo),
                      (self._evaluate(f, bracket.hi), bracket.hi)]
        y_best, x_best = max(candidates)

        x_best, y_best = self._polish(f, bracket, x_best, y_best)
        logger.debug(f"maximize_scalar: argmax={x_best!r}, max={y_best!r} after {steps} golden steps")
        return x_best, y_best

    def _polish(self, f, bracket: Bracket, x: float, y: float) -> Tuple[float, float]:
        # golden comparisons stall once f differences reach rounding level;
        # a wider three-point parabola still resolves the vertex
        for h in (1e-3, 1e-4):
            h *= max(1.0, abs(x))
            if not (bracket.contains(x - h) and bracket.contains(x + h)):
                break
            y0 = self._evaluate(f, x - h)
            y2 = self._evaluate(f, x + h)
            curvature = y0 - 2.0 * y + y2
            if curvature >= 0:
                break
            vertex = x + h * (y0 - y2) / (2.0 * curvature)
            if not bracket.contains(vertex) or abs(vertex - x) > h:
                break
            y_vertex = self._evaluate(f, vertex)
            if y_vertex < y:
                break
            x, y = vertex, y_vertex
        return x, y


class CapacitySweeper:
    """Capacity curves over one channel parameter"""

    def __init__(self, workers: Optional[int] = None):
        self.workers = config.SWEEP_WORKERS if workers is None else workers

    def _params_at(self, base: ChannelParams, parameter: str, x: float) -> ChannelParams:
        if parameter in ("rho_s2z", "rho_xs1"):
            return base.replace(**{parameter: x})
        if parameter == "snr":
            return base.replace(p=x * base.n)
        if parameter == "snr_db":
            return base.replace(p=base.n * 10.0 ** (x / 10.0))
        raise ValueError(f"Unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")

    def _point(self, base: ChannelParams, parameter: str, x: float, unit: str) -> SweepPoint:
        # capacity imports this module
        from sidecap.capacity import capacity_cd

        try:
            params = self._params_at(base, parameter, x)
        except SidecapError as e:
            raise SweepPointError(parameter, x, e) from e

        try:
            result = capacity_cd(params)
        except IndeterminateCapacity:
            logger.warning(f"Sweep point {parameter}={x} has an indeterminate capacity")
            return SweepPoint(x=x, y=None, token=INDETERMINATE_TOKEN)

        if result.is_infinite:
            return SweepPoint(x=x, y=None, token=INF_TOKEN)
        return SweepPoint(x=x, y=to_unit(result.value, unit))

    def sweep_capacity(self, base: ChannelParams, parameter: str, grid: Sequence[float],
                       unit: str = "nats") -> List[SweepPoint]:
        """
        Capacity at every grid value of one parameter, in grid order.

        snr sweeps set P = x*N, snr_db sweeps set P = N*10^(x/10); N stays fixed.
        """
        if parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"Unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")

        grid = [float(x) for x in grid]
        logger.info(f"Sweeping {parameter} over {len(grid)} points")

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(lambda x: self._point(base, parameter, x, unit), grid))
        return [self._point(base, parameter, x, unit) for x in grid]

    def sweep_family(self, base: ChannelParams, parameter: str, grid: Sequence[float], family_parameter: str,
                     family_values: Sequence[float], unit: str = "nats") -> Dict[float, List[SweepPoint]]:
        """One sweep per family value, e.g. capacity vs SNR for several rho_s2z"""
        if family_parameter not in ("rho_s2z", "rho_xs1"):
            raise ValueError(f"Family parameter must be rho_s2z or rho_xs1, got {family_parameter!r}")

        curves = {}
        for value in family_values:
            try:
                member = base.replace(**{family_parameter: value})
            except SidecapError as e:
                raise SweepPointError(family_parameter, value, e) from e
            curves[float(value)] = self.sweep_capacity(member, parameter, grid, unit)
        return curves


# Global instances
maximizer = ScalarMaximizer()
sweeper = CapacitySweeper()


def maximize_scalar(f: Callable[[float], float], bracket: Bracket, tol: Optional[float] = None) -> Tuple[float, float]:
    return maximizer.maximize(f, bracket, tol)


def sweep_capacity(base: ChannelParams, parameter: str, grid: Sequence[float], unit: str = "nats") -> List[SweepPoint]:
    return sweeper.sweep_capacity(base, parameter, grid, unit)


def sweep_family(base: ChannelParams, parameter: str, grid: Sequence[float], family_parameter: str,
                 family_values: Sequence[float], unit: str = "nats") -> Dict[float, List[SweepPoint]]:
    return sweeper.sweep_family(base, parameter, grid, family_parameter, family_values, unit)
