"""
Sampling oracle for the closed-form entropies, rates and bounds.

Draws jointly Gaussian (X, S1, S2, Z) by Cholesky factorization of the base
covariance, builds U and Y as exact linear combinations, and re-evaluates every
information quantity with the Gaussian plug-in estimator (the same log-det
functionals applied to the sample covariance).

Standard errors come from batch replicates: the sample is generated in B
seed-disjoint batches (numpy SeedSequence.spawn) and the spread of the per-batch
estimates, divided by sqrt(B), estimates the error of the full-sample value.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import config
from sidecap.capacity import calculator
from sidecap.errors import NotPositiveDefinite, SingularCovariance, SingularEmpiricalCovariance
from sidecap.gaussian_info import (
    ENTROPY_TABLE_SETS,
    closed_form_entropies,
    conditional_mutual_info,
    entropy_of,
    mutual_info,
)
from sidecap.model import BASE_LABELS, ChannelParams, CovMatrix, base_covariance

logger = logging.getLogger(__name__)

SAMPLE_LABELS = ("X", "S1", "S2", "Z", "U", "Y")


@dataclass(frozen=True)
class SampleBlock:
    """n x k draws; rows [bounds[b], bounds[b+1]) came from batch b"""

    labels: Tuple[str, ...]
    data: np.ndarray = field(repr=False)
    seed: int
    bounds: Tuple[int, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.labels):
            raise ValueError(f"Data shape {data.shape} does not match labels {self.labels}")
        if data.shape[0] < 2:
            raise ValueError(f"A sample block needs at least 2 rows, got {data.shape[0]}")
        data.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "data", data)
        if not self.bounds:
            object.__setattr__(self, "bounds", (0, data.shape[0]))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def column(self, label: str) -> np.ndarray:
        return self.data[:, self.labels.index(label)]

    def with_combination(self, name: str, weights: Mapping[str, float]) -> "SampleBlock":
        """Append a derived column sum_k weights[k] * column(k)"""
        derived = np.zeros(self.n)
        for label, weight in weights.items():
            derived = derived + weight * self.column(label)
        data = np.column_stack([self.data, derived])
        return SampleBlock(self.labels + (name,), data, self.seed, self.bounds)

    def covariance(self, rows: slice = slice(None)) -> CovMatrix:
        return CovMatrix.from_array(self.labels, np.cov(self.data[rows], rowvar=False))


@dataclass(frozen=True)
class McEstimate:
    value: float
    n: int
    std_error: float

    def within(self, target: float, sigmas: float) -> bool:
        return math.isfinite(self.std_error) and abs(self.value - target) <= sigmas * self.std_error


@dataclass(frozen=True)
class VerificationRow:
    name: str
    closed_form: float
    estimate: float
    std_error: float
    passed: bool

    @property
    def z_score(self) -> float:
        if not self.std_error > 0 or not math.isfinite(self.std_error):
            return math.inf
        return (self.estimate - self.closed_form) / self.std_error


@dataclass(frozen=True)
class VerificationReport:
    params: ChannelParams
    alpha: float
    n: int
    seed: int
    rows: List[VerificationRow]

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def failures(self) -> List[VerificationRow]:
        return [row for row in self.rows if not row.passed]


def cholesky(cov: Union[CovMatrix, np.ndarray]) -> np.ndarray:
    """
    Lower-triangular L with L @ L.T == cov.

    Raises:
        NotPositiveDefinite: cov is singular or indefinite (a degenerate channel)
    """
    entries = cov.entries if isinstance(cov, CovMatrix) else np.asarray(cov, dtype=float)
    try:
        factor = np.linalg.cholesky(entries)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Covariance is not positive definite: {e}") from e

    scale = np.sqrt(np.outer(np.diag(entries), np.diag(entries)))
    if not np.all(np.abs(factor @ factor.T - entries) <= 1e-10 * scale):
        raise NotPositiveDefinite("Cholesky factor does not reproduce the covariance")
    return factor


class MonteCarloOracle:
    """Seeded sampler and plug-in estimator for the channel's information quantities"""

    def __init__(self, batches: Optional[int] = None, pass_sigma: Optional[float] = None):
        self.batches = config.MC_BATCHES if batches is None else batches
        self.pass_sigma = config.MC_PASS_SIGMA if pass_sigma is None else pass_sigma

    def sample(self, params: ChannelParams, alpha: float, n: int, seed: int) -> SampleBlock:
        """
        Draw n rows of (X, S1, S2, Z, U, Y); deterministic given (params, alpha, n, seed).
        """
        if n < 2:
            raise ValueError(f"Need at least 2 samples, got {n}")

        factor = cholesky(base_covariance(params))
        children = np.random.SeedSequence(seed).spawn(self.batches)
        sizes = [len(part) for part in np.array_split(np.arange(n), self.batches)]

        draws = []
        for child, size in zip(children, sizes):
            rng = np.random.default_rng(child)
            draws.append(rng.standard_normal((size, len(BASE_LABELS))) @ factor.T)
        base = np.vstack(draws)

        x, s1, s2, z = base.T
        u = alpha * s1 + x
        y = x + s1 + s2 + z
        bounds = tuple(int(b) for b in np.concatenate([[0], np.cumsum(sizes)]))

        logger.debug(f"Sampled {n} rows in {self.batches} batches (seed={seed})")
        return SampleBlock(SAMPLE_LABELS, np.column_stack([x, s1, s2, z, u, y]), seed, bounds)

    def _replicate_slices(self, block: SampleBlock, k: int) -> List[slice]:
        # each replicate needs a few more rows than variables for a usable covariance
        slices = [slice(lo, hi) for lo, hi in zip(block.bounds[:-1], block.bounds[1:])]
        if all(s.stop - s.start >= k + 2 for s in slices) and len(slices) >= 2:
            return slices
        count = min(self.batches, block.n // (k + 2))
        parts = np.array_split(np.arange(block.n), count) if count >= 2 else []
        return [slice(int(part[0]), int(part[-1]) + 1) for part in parts]

    def estimate(self, block: SampleBlock, statistic: Callable[[CovMatrix], float], k: int) -> McEstimate:
        """
        Plug-in estimate of statistic(covariance) with a batch-replicate standard error.

        Args:
            block: sample block
            statistic: functional of a labeled covariance, in nats
            k: number of variables the statistic involves

        Raises:
            SingularEmpiricalCovariance: the full-sample covariance is singular
        """
        try:
            value = statistic(block.covariance())
        except SingularCovariance as e:
            raise SingularEmpiricalCovariance(f"{e}; retry with another seed") from e

        replicates = []
        for rows in self._replicate_slices(block, k):
            try:
                replicates.append(statistic(block.covariance(rows)))
            except SingularCovariance:
                logger.debug(f"Skipping singular replicate rows {rows.start}:{rows.stop}")

        if len(replicates) >= 2:
            std_error = float(np.std(replicates, ddof=1) / math.sqrt(len(replicates)))
        else:
            logger.warning(f"Only {len(replicates)} usable replicates for n={block.n}; standard error unavailable")
            std_error = math.inf
        return McEstimate(value=float(value), n=block.n, std_error=std_error)

    def mc_entropy(self, block: SampleBlock, labels: Sequence[str]) -> McEstimate:
        return self.estimate(block, lambda cov: entropy_of(cov, labels), len(labels))

    def mc_mutual_info(self, block: SampleBlock, set_a: Sequence[str], set_b: Sequence[str]) -> McEstimate:
        """Gaussian plug-in estimate of I(A;B)"""
        k = len(set_a) + len(set_b)
        return self.estimate(block, lambda cov: mutual_info(cov, set_a, set_b), k)

    def mc_conditional_mutual_info(self, block: SampleBlock, set_a: Sequence[str], set_b: Sequence[str],
                                   given: Sequence[str]) -> McEstimate:
        k = len(set_a) + len(set_b) + len(given)
        return self.estimate(block, lambda cov: conditional_mutual_info(cov, set_a, set_b, given), k)

    def mc_verify(self, params: ChannelParams, alpha: Optional[float] = None, n: Optional[int] = None,
                  seed: Optional[int] = None) -> VerificationReport:
        """
        Compare every closed-form quantity with its sampled estimate.

        Rows: the seven closed-form entropies, R_D(alpha), C_D (as the rate at alpha*)
        and the converse bound I(X;Y|S1,S2). A row passes when the estimate lies
        within pass_sigma standard errors of the closed form.
        """
        n = config.MC_SAMPLES if n is None else n
        seed = config.MC_SEED if seed is None else seed
        best_alpha = calculator.alpha_star(params)
        alpha = best_alpha if alpha is None else float(alpha)

        logger.info(f"Verifying closed forms with n={n}, seed={seed}, alpha={alpha} for {params}")
        block = self.sample(params, alpha, n, seed)
        block = block.with_combination("X+Z", {"X": 1.0, "Z": 1.0})
        block = block.with_combination("U*", {"S1": best_alpha, "X": 1.0})

        table = closed_form_entropies(params, alpha).as_dict()
        checks: List[Tuple[str, float, Callable[[CovMatrix], float], int]] = []

        for name, labels in ENTROPY_TABLE_SETS.items():
            checks.append((name, table[name], lambda cov, labels=labels: entropy_of(cov, labels), len(labels)))

        checks.append(("rate_rd", calculator.rate_rd(params, alpha).rate,
                       lambda cov: mutual_info(cov, ["U"], ["Y", "S2"]) - mutual_info(cov, ["U"], ["S1"]), 4))
        checks.append(("capacity_cd", calculator.capacity_cd(params).value,
                       lambda cov: mutual_info(cov, ["U*"], ["Y", "S2"]) - mutual_info(cov, ["U*"], ["S1"]), 4))
        checks.append(("upper_bound", calculator.upper_bound(params),
                       lambda cov: (entropy_of(cov, ["X+Z", "S1", "S2"]) - entropy_of(cov, ["S1", "S2"])
                                    - entropy_of(cov, ["Z", "S2"]) + entropy_of(cov, ["S2"])), 4))

        rows = []
        for name, closed_form, statistic, k in checks:
            estimate = self.estimate(block, statistic, k)
            passed = estimate.within(closed_form, self.pass_sigma)
            rows.append(VerificationRow(name=name, closed_form=closed_form, estimate=estimate.value,
                                        std_error=estimate.std_error, passed=passed))
            if not passed:
                logger.warning(
                    f"Check {name} failed: closed form {closed_form:.6g}, estimate {estimate.value:.6g} "
                    f"+- {estimate.std_error:.3g}"
                )

        return VerificationReport(params=params, alpha=alpha, n=n, seed=seed, rows=rows)


# Global oracle instance
oracle = MonteCarloOracle()


def sample(params: ChannelParams, alpha: float, n: int, seed: int) -> SampleBlock:
    return oracle.sample(params, alpha, n, seed)


def mc_mutual_info(block: SampleBlock, set_a: Sequence[str], set_b: Sequence[str]) -> McEstimate:
    return oracle.mc_mutual_info(block, set_a, set_b)


def mc_verify(params: ChannelParams, alpha: Optional[float] = None, n: Optional[int] = None,
              seed: Optional[int] = None) -> VerificationReport:
    return oracle.mc_verify(params, alpha, n, seed)
