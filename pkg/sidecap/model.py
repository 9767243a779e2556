"""Channel definition, derived moments and labeled covariance assembly.

The channel has input X (power P), transmitter state S1 (variance Q1, correlated
with X), receiver state S2 (variance Q2, correlated with the noise Z) and noise
Z (variance N). S2 is independent of (X, S1); Z is independent of (X, S1).
The auxiliary variable is U = alpha*S1 + X and the output Y = X + S1 + S2 + Z.
"""

import math
import logging
from dataclasses import dataclass, asdict, field
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import config
from sidecap.errors import CorrelationOutOfRange, LabelError, NonPositiveVariance

logger = logging.getLogger(__name__)

BASE_LABELS: Tuple[str, ...] = ("X", "S1", "S2", "Z")
JOINT_LABELS: Tuple[str, ...] = ("X", "S1", "S2", "Z", "U", "Y")

VARIANCE_FIELDS = ("p", "q1", "q2", "n")
CORRELATION_FIELDS = ("rho_xs1", "rho_s2z")


@dataclass(frozen=True)
class ChannelParams:
    """Validated channel definition. Build through :func:`validate`."""

    p: float
    q1: float
    q2: float
    n: float
    rho_xs1: float = 0.0
    rho_s2z: float = 0.0

    @property
    def xs1_degenerate(self) -> bool:
        return abs(self.rho_xs1) == 1.0

    @property
    def s2z_degenerate(self) -> bool:
        return abs(self.rho_s2z) == 1.0

    @property
    def degenerate(self) -> bool:
        return self.xs1_degenerate or self.s2z_degenerate

    def replace(self, **changes: float) -> "ChannelParams":
        """Return a validated copy with some fields changed"""
        raw = asdict(self)
        raw.update(changes)
        return validate(raw)

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class DerivedMoments:
    a1: float
    l2: float
    d_q2: float
    d_pq1: float


def validate(raw: Union[Mapping[str, Any], ChannelParams]) -> ChannelParams:
    """
    Check a raw parameter record against the channel constraints.

    Args:
        raw: mapping with keys p, q1, q2, n and optionally rho_xs1, rho_s2z
            (missing correlations default to 0), or an existing ChannelParams

    Returns:
        ChannelParams: the validated, immutable parameter set

    Raises:
        NonPositiveVariance: a power/variance is missing, non-finite or <= 0
        CorrelationOutOfRange: a correlation is non-finite or |rho| > 1
    """
    if isinstance(raw, ChannelParams):
        raw = asdict(raw)

    values: Dict[str, float] = {}
    for name in VARIANCE_FIELDS:
        if raw.get(name) is None:
            raise NonPositiveVariance(f"{name} is required")
        try:
            value = float(raw[name])
        except (TypeError, ValueError):
            raise NonPositiveVariance(f"{name} must be a number, got {raw[name]!r}")
        if not math.isfinite(value) or value <= 0:
            raise NonPositiveVariance(f"{name} must be finite and strictly positive, got {value}")
        values[name] = value

    for name in CORRELATION_FIELDS:
        raw_value = raw.get(name)
        try:
            value = 0.0 if raw_value is None else float(raw_value)
        except (TypeError, ValueError):
            raise CorrelationOutOfRange(f"{name} must be a number, got {raw_value!r}")
        if not math.isfinite(value) or abs(value) > 1.0:
            raise CorrelationOutOfRange(f"{name} must lie in [-1, 1], got {value}")
        values[name] = value

    params = ChannelParams(**values)
    if params.degenerate:
        logger.warning(f"Degenerate channel accepted: rho_xs1={params.rho_xs1}, rho_s2z={params.rho_s2z}")
    return params


def derived_moments(params: ChannelParams) -> DerivedMoments:
    """A1 = E{X S1}, L2 = E{S2 Z} and the two determinants d_Q2, d_PQ1.

    The names d_q2 / d_pq1 follow the usual notation even though d_q2 = P*Q1 - A1^2
    holds no Q2 and d_pq1 = Q2*N - L2^2 holds neither P nor Q1.
    """
    a1 = math.sqrt(params.p * params.q1) * params.rho_xs1
    l2 = math.sqrt(params.q2 * params.n) * params.rho_s2z
    # product form keeps both exactly zero at |rho| = 1
    d_q2 = params.p * params.q1 * (1.0 - params.rho_xs1 * params.rho_xs1)
    d_pq1 = params.q2 * params.n * (1.0 - params.rho_s2z * params.rho_s2z)
    return DerivedMoments(a1=a1, l2=l2, d_q2=d_q2, d_pq1=d_pq1)


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric covariance matrix whose rows and columns carry variable names"""

    labels: Tuple[str, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise LabelError(f"Duplicate labels in {labels}")
        entries = np.array(self.entries, dtype=float)
        if entries.shape != (len(labels), len(labels)):
            raise LabelError(f"Matrix shape {entries.shape} does not match {len(labels)} labels")
        if not np.array_equal(entries, entries.T):
            raise ValueError("Covariance matrix must be exactly symmetric")
        entries.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_array(cls, labels: Sequence[str], array: np.ndarray) -> "CovMatrix":
        """Build from a nearly symmetric array (e.g. a sample covariance)"""
        array = np.asarray(array, dtype=float)
        return cls(tuple(labels), (array + array.T) / 2.0)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"Unknown variable {label!r}; known: {', '.join(self.labels)}")

    def __getitem__(self, key: Tuple[str, str]) -> float:
        row, col = key
        return float(self.entries[self.index(row), self.index(col)])

    def submatrix(self, labels: Iterable[str]) -> "CovMatrix":
        labels = tuple(labels)
        idx = [self.index(label) for label in labels]
        return CovMatrix(labels, self.entries[np.ix_(idx, idx)])

    def with_combination(self, name: str, weights: Mapping[str, float]) -> "CovMatrix":
        """Append the variable sum_k weights[k] * k as a new row and column"""
        if name in self.labels:
            raise LabelError(f"Variable {name!r} already present")
        k = self.dimension
        transform = np.zeros((k + 1, k))
        transform[:k, :k] = np.eye(k)
        for label, weight in weights.items():
            transform[k, self.index(label)] = weight
        expanded = transform @ self.entries @ transform.T
        return CovMatrix(self.labels + (name,), (expanded + expanded.T) / 2.0)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def is_psd(self, rtol: Optional[float] = None) -> bool:
        rtol = config.PSD_RTOL if rtol is None else rtol
        if np.any(np.diag(self.entries) < 0):
            return False
        return self.min_eigenvalue() >= -rtol * float(np.trace(self.entries))

    def det(self) -> float:
        return float(np.linalg.det(self.entries))


def base_covariance(params: ChannelParams) -> CovMatrix:
    """Covariance of (X, S1, S2, Z) with X at full power P"""
    moments = derived_moments(params)
    entries = np.array([
        [params.p, moments.a1, 0.0, 0.0],
        [moments.a1, params.q1, 0.0, 0.0],
        [0.0, 0.0, params.q2, moments.l2],
        [0.0, 0.0, moments.l2, params.n],
    ])
    return CovMatrix(BASE_LABELS, entries)


@dataclass(frozen=True)
class JointModel:
    params: ChannelParams
    alpha: float
    base: CovMatrix

    @classmethod
    def from_params(cls, params: ChannelParams, alpha: float) -> "JointModel":
        return cls(params=params, alpha=float(alpha), base=base_covariance(params))

    def covariance(self) -> CovMatrix:
        """Extend the base covariance with U = alpha*S1 + X and Y = X + S1 + S2 + Z"""
        with_u = self.base.with_combination("U", {"S1": self.alpha, "X": 1.0})
        return with_u.with_combination("Y", {"X": 1.0, "S1": 1.0, "S2": 1.0, "Z": 1.0})


def joint_covariance(params: ChannelParams, alpha: float) -> CovMatrix:
    """6x6 covariance over (X, S1, S2, Z, U, Y)"""
    cov = JointModel.from_params(params, alpha).covariance()
    if not cov.is_psd():
        logger.warning(f"Joint covariance failed the PSD check for alpha={alpha}: min eigenvalue {cov.min_eigenvalue()}")
    return cov


def check_structure(model: JointModel, tol: float = 1e-12) -> bool:
    """
    Gaussian test of the Markov chain S2 -> S1 -> (U, X).

    The chain holds iff the partial covariance of S2 with (U, X) given S1 vanishes.
    The tolerance is relative to sqrt(Var(S2) * Var(.)) so the check is scale-free.
    """
    cov = model.covariance()
    s1 = cov.index("S1")
    s2 = cov.index("S2")
    targets = [cov.index("U"), cov.index("X")]

    sigma = cov.entries
    partial = sigma[s2, targets] - sigma[s2, s1] * sigma[s1, targets] / sigma[s1, s1]
    scale = np.sqrt(sigma[s2, s2] * np.diag(sigma)[targets])
    scale = np.where(scale > 0, scale, 1.0)

    worst = float(np.max(np.abs(partial) / scale))
    logger.debug(f"Markov structure residual {worst:.3e} (alpha={model.alpha})")
    return worst <= tol
