import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

from config import config
from sidecap.errors import DegenerateChannel, IndeterminateCapacity, NonPositiveVariance
from sidecap.gaussian_info import (
    LOG_2PIE,
    closed_form_entropies,
    conditional_entropy,
    entropy_of,
    mutual_info,
)
from sidecap.model import ChannelParams, derived_moments, joint_covariance
from sidecap.optimize import Bracket, maximize_scalar

logger = logging.getLogger(__name__)

AGREEMENT_TOL = 1e-9


@dataclass(frozen=True)
class RateResult:
    """Achievable rate R_D(alpha) = I(U;Y,S2) - I(U;S1), nats"""

    rate: float
    alpha: float
    i_u_ys2: float
    i_u_s1: float


@dataclass(frozen=True)
class CapacityResult:
    """Capacity with its achievability and converse evaluations, nats (may be +inf)"""

    value: float
    achievability: float
    converse: float
    alpha_star: Optional[float] = None

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


class CapacityCalculator:
    """Capacity of the Gaussian channel with correlated two-sided state information"""

    def __init__(self, alpha_bracket: Optional[float] = None):
        self.alpha_bracket_width = config.ALPHA_BRACKET if alpha_bracket is None else alpha_bracket

    def _require_nondegenerate(self, params: ChannelParams, what: str):
        if params.degenerate:
            raise DegenerateChannel(
                f"{what} needs |rho| < 1 (rho_xs1={params.rho_xs1}, rho_s2z={params.rho_s2z})"
            )

    def _rate_denominator(self, params: ChannelParams, alpha: float) -> float:
        m = derived_moments(params)
        return ((alpha - 1.0) ** 2 * params.q2 * m.d_q2
                + m.d_pq1 * (alpha * alpha * params.q1 + 2.0 * alpha * m.a1 + params.p))

    def rate_rd(self, params: ChannelParams, alpha: float) -> RateResult:
        """
        Achievable rate of the linear auxiliary U = alpha*S1 + X.

        The rate is the closed form
            0.5*ln(d_Q2*(Q2*(P+Q1+2A1)+d_PQ1) / (Q1*((alpha-1)^2*Q2*d_Q2 + d_PQ1*(alpha^2*Q1+2*alpha*A1+P))))
        and the two mutual-information components come from the closed-form entropies.
        """
        self._require_nondegenerate(params, "rate_rd")
        m = derived_moments(params)
        numerator = m.d_q2 * (params.q2 * (params.p + params.q1 + 2.0 * m.a1) + m.d_pq1)
        denominator = params.q1 * self._rate_denominator(params, alpha)
        rate = 0.5 * math.log(numerator / denominator)

        table = closed_form_entropies(params, alpha)
        h_u = 0.5 * (LOG_2PIE + math.log(alpha * alpha * params.q1 + 2.0 * alpha * m.a1 + params.p))
        i_u_ys2 = h_u + table.h_y_s2 - table.h_u_y_s2
        i_u_s1 = h_u + table.h_s1 - table.h_u_s1

        return RateResult(rate=rate, alpha=float(alpha), i_u_ys2=i_u_ys2, i_u_s1=i_u_s1)

    def rate_rd_generic(self, params: ChannelParams, alpha: float) -> RateResult:
        """Same rate from log-determinants of the joint covariance"""
        self._require_nondegenerate(params, "rate_rd")
        cov = joint_covariance(params, alpha)
        i_u_ys2 = mutual_info(cov, ["U"], ["Y", "S2"])
        i_u_s1 = mutual_info(cov, ["U"], ["S1"])
        return RateResult(rate=i_u_ys2 - i_u_s1, alpha=float(alpha), i_u_ys2=i_u_ys2, i_u_s1=i_u_s1)

    def alpha_star(self, params: ChannelParams) -> float:
        """
        Maximizer of rate_rd: the minimizer of the quadratic denominator,
        (Q2*d_Q2 - A1*d_PQ1) / (Q2*d_Q2 + Q1*d_PQ1).
        """
        self._require_nondegenerate(params, "alpha_star")
        m = derived_moments(params)
        return (params.q2 * m.d_q2 - m.a1 * m.d_pq1) / (params.q2 * m.d_q2 + params.q1 * m.d_pq1)

    def alpha_printed(self, params: ChannelParams) -> Optional[float]:
        """Coefficient with a minus sign in the denominator; None when that denominator is 0.

        Kept for comparison only: it disagrees with the maximizer of rate_rd and
        with alpha = P/(P+N) at zero correlations.
        """
        m = derived_moments(params)
        denominator = params.q2 * m.d_q2 - params.q1 * m.d_pq1
        if denominator == 0.0:
            return None
        return (params.q2 * m.d_q2 - m.a1 * m.d_pq1) / denominator

    def upper_bound(self, params: ChannelParams) -> float:
        """Converse bound 0.5*ln((Q2*d_Q2 + Q1*d_PQ1) / (Q1*d_PQ1)), nats"""
        if params.s2z_degenerate:
            raise DegenerateChannel(f"upper_bound needs |rho_s2z| < 1, got {params.rho_s2z}")
        m = derived_moments(params)
        return 0.5 * math.log((params.q2 * m.d_q2 + params.q1 * m.d_pq1) / (params.q1 * m.d_pq1))

    def upper_bound_generic(self, params: ChannelParams) -> float:
        """Converse bound as H(X+Z,S1,S2) - H(S1,S2) - H(Z|S2) from log-determinants"""
        if params.s2z_degenerate:
            raise DegenerateChannel(f"upper_bound needs |rho_s2z| < 1, got {params.rho_s2z}")
        cov = joint_covariance(params, 0.0).with_combination("X+Z", {"X": 1.0, "Z": 1.0})
        return (entropy_of(cov, ["X+Z", "S1", "S2"])
                - entropy_of(cov, ["S1", "S2"])
                - conditional_entropy(cov, ["Z"], ["S2"]))

    def capacity_cd(self, params: ChannelParams) -> CapacityResult:
        """
        Capacity 0.5*ln(1 + P(1-rho_xs1^2) / (N(1-rho_s2z^2))) with both proof sides.

        Raises:
            IndeterminateCapacity: both correlations are +-1
        """
        if params.s2z_degenerate and params.xs1_degenerate:
            raise IndeterminateCapacity(
                f"rho_xs1={params.rho_xs1} and rho_s2z={params.rho_s2z} give an undefined 0/0 capacity"
            )

        if params.s2z_degenerate:
            logger.warning("|rho_s2z| = 1: capacity is infinite")
            return CapacityResult(value=math.inf, achievability=math.inf, converse=math.inf)

        snr = params.p * (1.0 - params.rho_xs1 ** 2) / (params.n * (1.0 - params.rho_s2z ** 2))
        value = 0.5 * math.log1p(snr)
        converse = self.upper_bound(params)

        if params.xs1_degenerate:
            logger.warning("|rho_xs1| = 1: only the zero rate is achievable")
            return CapacityResult(value=value, achievability=0.0, converse=converse)

        alpha = self.alpha_star(params)
        achievability = self.rate_rd(params, alpha).rate

        if abs(achievability - value) > AGREEMENT_TOL or abs(converse - value) > AGREEMENT_TOL:
            logger.warning(
                f"Capacity sides disagree: value={value!r}, achievability={achievability!r}, converse={converse!r}"
            )

        logger.info(f"C_D={value:.12g} nats (alpha*={alpha:.12g}) for {params}")
        return CapacityResult(value=value, achievability=achievability, converse=converse, alpha_star=alpha)

    def costa_capacity(self, p: float, n: float) -> float:
        """0.5*ln(1 + p/n): capacity with interference known only at the transmitter"""
        if not (p > 0 and n > 0):
            raise NonPositiveVariance(f"costa_capacity needs p, n > 0, got p={p}, n={n}")
        return 0.5 * math.log1p(p / n)

    def cognition_gain(self, params: ChannelParams) -> Tuple[float, float]:
        """
        What the two kinds of state information are worth, nats.

        Returns:
            (receiver_gain, transmitter_loss): receiver_gain = C_D - C_D|rho_s2z=0,
            transmitter_loss = costa - C_D|rho_s2z=0
        """
        without_receiver = self.capacity_cd(params.replace(rho_s2z=0.0)).value
        with_receiver = self.capacity_cd(params).value
        receiver_gain = with_receiver - without_receiver
        transmitter_loss = self.costa_capacity(params.p, params.n) - without_receiver
        return receiver_gain, transmitter_loss

    def alpha_bracket(self, params: ChannelParams) -> Bracket:
        """Search interval for alpha*, widened when the bound on |alpha*| exceeds the default"""
        m = derived_moments(params)
        weight = params.q2 * m.d_q2 + params.q1 * m.d_pq1
        bound = (params.q2 * m.d_q2 + abs(m.a1) * m.d_pq1) / weight if weight > 0 else math.inf
        width = self.alpha_bracket_width
        if bound > width:
            width = 1.5 * bound
            logger.warning(f"|alpha*| bound {bound:.6g} exceeds the default bracket; widening to +-{width:.6g}")
        return Bracket(-width, width)

    def numeric_alpha(self, params: ChannelParams, tol: Optional[float] = None) -> Tuple[float, float]:
        """Locate alpha* by direct numerical maximization of rate_rd"""
        self._require_nondegenerate(params, "numeric_alpha")
        return maximize_scalar(lambda a: self.rate_rd(params, a).rate, self.alpha_bracket(params), tol)


# Global calculator instance
calculator = CapacityCalculator()


def rate_rd(params: ChannelParams, alpha: float) -> RateResult:
    return calculator.rate_rd(params, alpha)


def alpha_star(params: ChannelParams) -> float:
    return calculator.alpha_star(params)


def alpha_printed(params: ChannelParams) -> Optional[float]:
    return calculator.alpha_printed(params)


def capacity_cd(params: ChannelParams) -> CapacityResult:
    return calculator.capacity_cd(params)


def upper_bound(params: ChannelParams) -> float:
    return calculator.upper_bound(params)


def costa_capacity(p: float, n: float) -> float:
    return calculator.costa_capacity(p, n)


def cognition_gain(params: ChannelParams) -> Tuple[float, float]:
    return calculator.cognition_gain(params)
