"""Differential entropy and mutual information of jointly Gaussian variables.

Two independent routes are provided: a generic log-determinant evaluation on any
labeled covariance, and the closed-form expressions of the channel's entropies in
terms of (P, Q1, Q2, N, A1, L2, d_Q2, d_PQ1). All values are in nats.
"""

import math
import logging
from dataclasses import dataclass, asdict
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from config import config
from sidecap.errors import DegenerateChannel, LabelError, SingularCovariance
from sidecap.model import ChannelParams, CovMatrix, derived_moments

logger = logging.getLogger(__name__)

LOG_2PIE = math.log(2.0 * math.pi * math.e)
UNITS = ("nats", "bits")


@dataclass(frozen=True)
class EntropyValue:
    value: float
    variable_set: Tuple[str, ...]


@dataclass(frozen=True)
class EntropyTable:
    """Closed-form entropies (nats) used by the achievability and converse arguments"""

    h_y_s2: float
    h_u_y_s2: float
    h_s1: float
    h_u_s1: float
    h_x_plus_z_s1_s2: float
    h_s1_s2: float
    h_z_s2: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


# variable sets each table entry describes; "X+Z" is appended on demand
ENTROPY_TABLE_SETS: Dict[str, Tuple[str, ...]] = {
    "h_y_s2": ("Y", "S2"),
    "h_u_y_s2": ("U", "Y", "S2"),
    "h_s1": ("S1",),
    "h_u_s1": ("U", "S1"),
    "h_x_plus_z_s1_s2": ("X+Z", "S1", "S2"),
    "h_s1_s2": ("S1", "S2"),
    "h_z_s2": ("Z", "S2"),
}


def to_unit(value_nats: float, unit: str) -> float:
    """Convert a value in nats to the requested unit"""
    if unit == "nats":
        return value_nats
    if unit == "bits":
        return value_nats / math.log(2.0)
    raise ValueError(f"Unknown unit {unit!r}; expected one of {UNITS}")


def gaussian_entropy(k: int, det: float) -> float:
    """0.5 * ln((2 pi e)^k det) for a determinant known in closed form"""
    if not det > 0:
        raise DegenerateChannel(f"Determinant {det} is not strictly positive")
    return 0.5 * (k * LOG_2PIE + math.log(det))


def log_det(cov: CovMatrix) -> float:
    """
    Log-determinant with a scale-free singularity test.

    Raises SingularCovariance when det <= SINGULAR_RTOL * prod(diag) or the
    log-determinant is not finite.
    """
    diag = np.diag(cov.entries)
    if np.any(diag <= 0):
        raise SingularCovariance(f"Non-positive variance on the diagonal of cov({', '.join(cov.labels)})")

    sign, logdet = np.linalg.slogdet(cov.entries)
    threshold = math.log(config.SINGULAR_RTOL) + float(np.sum(np.log(diag)))
    if not sign > 0 or not np.isfinite(logdet) or logdet <= threshold:
        raise SingularCovariance(
            f"cov({', '.join(cov.labels)}) is singular (sign={sign:+.0f}, log det={logdet:.6g}); "
            f"the channel is degenerate"
        )
    return float(logdet)


def diff_entropy(cov: CovMatrix) -> EntropyValue:
    """Differential entropy 0.5 * ln((2 pi e)^k det(cov)) in nats"""
    value = 0.5 * (cov.dimension * LOG_2PIE + log_det(cov))
    return EntropyValue(value=value, variable_set=cov.labels)


def _ordered(cov: CovMatrix, labels: Iterable[str]) -> Tuple[str, ...]:
    # canonical order keeps H(A)+H(B)-H(A,B) bitwise symmetric in A and B
    wanted = set(labels)
    return tuple(label for label in cov.labels if label in wanted)


def _check_sets(cov: CovMatrix, *sets: Sequence[str]) -> None:
    seen = set()
    for labels in sets:
        if not labels:
            raise LabelError("Variable sets must be non-empty")
        if len(set(labels)) != len(labels):
            raise LabelError(f"Duplicate labels in {tuple(labels)}")
        for label in labels:
            cov.index(label)
        overlap = seen.intersection(labels)
        if overlap:
            raise LabelError(f"Variable sets overlap on {sorted(overlap)}")
        seen.update(labels)


def entropy_of(cov: CovMatrix, labels: Iterable[str]) -> float:
    return diff_entropy(cov.submatrix(_ordered(cov, labels))).value


def mutual_info(cov: CovMatrix, set_a: Sequence[str], set_b: Sequence[str]) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B); exactly 0 when the cross-covariance block is zero"""
    _check_sets(cov, set_a, set_b)
    a = _ordered(cov, set_a)
    b = _ordered(cov, set_b)

    cross = cov.entries[np.ix_([cov.index(x) for x in a], [cov.index(x) for x in b])]
    if not np.any(cross):
        # still reject singular inputs
        entropy_of(cov, a + b)
        return 0.0

    return entropy_of(cov, a) + entropy_of(cov, b) - entropy_of(cov, a + b)


def conditional_entropy(cov: CovMatrix, target: Sequence[str], given: Sequence[str]) -> float:
    """H(T | G) = H(T, G) - H(G)"""
    _check_sets(cov, target, given)
    return entropy_of(cov, tuple(target) + tuple(given)) - entropy_of(cov, given)


def conditional_mutual_info(cov: CovMatrix, set_a: Sequence[str], set_b: Sequence[str],
                            given: Sequence[str]) -> float:
    """I(A;B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)"""
    _check_sets(cov, set_a, set_b, given)
    a, b, c = tuple(set_a), tuple(set_b), tuple(given)
    return (entropy_of(cov, a + c) + entropy_of(cov, b + c)
            - entropy_of(cov, a + b + c) - entropy_of(cov, c))


def closed_form_entropies(params: ChannelParams, alpha: float) -> EntropyTable:
    """
    Evaluate the channel's entropies from their closed forms.

    Args:
        params: non-degenerate channel (both |rho| < 1)
        alpha: coefficient of U = alpha*S1 + X

    Returns:
        EntropyTable: seven entropies in nats

    Raises:
        DegenerateChannel: a correlation is +-1 or a determinant vanishes
    """
    if params.degenerate:
        raise DegenerateChannel(
            f"Closed-form entropies need |rho| < 1 (rho_xs1={params.rho_xs1}, rho_s2z={params.rho_s2z})"
        )

    m = derived_moments(params)
    p, q1, q2 = params.p, params.q1, params.q2
    var_u = alpha * alpha * q1 + 2.0 * alpha * m.a1 + p

    det_y_s2 = q2 * (p + q1 + 2.0 * m.a1) + m.d_pq1
    det_u_y_s2 = m.d_pq1 * var_u + (alpha - 1.0) ** 2 * q2 * m.d_q2
    det_x_plus_z_s1_s2 = q2 * m.d_q2 + q1 * m.d_pq1

    table = EntropyTable(
        h_y_s2=gaussian_entropy(2, det_y_s2),
        h_u_y_s2=gaussian_entropy(3, det_u_y_s2),
        h_s1=gaussian_entropy(1, q1),
        h_u_s1=gaussian_entropy(2, m.d_q2),
        h_x_plus_z_s1_s2=gaussian_entropy(3, det_x_plus_z_s1_s2),
        h_s1_s2=gaussian_entropy(2, q1 * q2),
        h_z_s2=gaussian_entropy(2, m.d_pq1),
    )
    logger.debug(f"Closed-form entropies at alpha={alpha}: {table}")
    return table


def entropy_table_from_covariance(cov: CovMatrix) -> EntropyTable:
    """Same table evaluated by log-determinants of a (joint or empirical) covariance"""
    if "X+Z" not in cov.labels:
        cov = cov.with_combination("X+Z", {"X": 1.0, "Z": 1.0})
    return EntropyTable(**{
        name: diff_entropy(cov.submatrix(labels)).value
        for name, labels in ENTROPY_TABLE_SETS.items()
    })
