"""Monte Carlo samplers for the random-time laws and the composed process.

Sampling goes through the Gamma-power representation of the time law: each
factor is ``W = (m^m t)^{1/(m(m-1))} X^{1/m}`` with ``X ~ Gamma(j/m)``, so
a product of ``m - 1`` independent factors has the law of the random time
at ``alpha = 1/m``.  The composed process draws the time first and then a
centered normal of variance twice the time (the diffusion here has
generator ``d^2/dx^2``, not the probabilist's ``1/2 d^2/dx^2``).

Streams are counter-based (Philox): a batch is a pure function of
``(seed, stream_id, count)``, so parallel workers with distinct stream ids
stay reproducible and independent.  Gamma variates use the
Marsaglia-Tsang squeeze/rejection method, with shapes below one boosted
(sample at ``shape + 1``, then multiply by a uniform power correction);
only uniforms and normals are consumed from the underlying stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, gammainc
from scipy.stats import kstest

from ._errors import DomainError
from .timechange import GjLaw

__all__ = [
    "RngStream",
    "BatchMeta",
    "SampleBatch",
    "sample_gj",
    "sample_time_product",
    "sample_reflecting_bm",
    "sample_composed_bm",
    "gj_cdf",
    "reflecting_cdf",
    "ks_statistic",
    "ks_critical",
]

_UINT64 = 2 ** 64


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream identity.

    Distinct ``stream_id`` values index statistically independent
    sequences under the same seed; identical pairs reproduce bit-identical
    samples on every run and worker layout.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v < _UINT64:
                raise DomainError(
                    f"{name} must be an integer in [0, 2^64), got {v!r}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BatchMeta:
    """Provenance of one batch: law description and stream identity."""

    law: str
    count: int
    seed: int
    stream_id: int


@dataclass(frozen=True)
class SampleBatch:
    """Samples plus the metadata needed to regenerate them."""

    values: np.ndarray
    meta: BatchMeta

    def __post_init__(self) -> None:
        if self.values.size != self.meta.count:
            raise DomainError(
                f"batch holds {self.values.size} values, "
                f"meta promises {self.meta.count}")


def _uniform_open(gen: np.random.Generator, count: int) -> np.ndarray:
    # map [0, 1) to (0, 1]: keeps logs and power corrections finite
    return 1.0 - gen.random(count)


def _gamma_marsaglia_tsang(gen: np.random.Generator, shape: float,
                           count: int) -> np.ndarray:
    """Unit-scale Gamma(shape) variates for shape >= 1."""
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        x = gen.standard_normal(need)
        u = _uniform_open(gen, need)
        v = (1.0 + c * x) ** 3
        ok = v > 0.0
        vsafe = np.where(ok, v, 1.0)
        squeeze = u < 1.0 - 0.0331 * (x * x) * (x * x)
        slow = np.log(u) < 0.5 * x * x + d * (1.0 - vsafe + np.log(vsafe))
        accept = ok & (squeeze | slow)
        got = d * v[accept]
        out[filled:filled + got.size] = got
        filled += got.size
    return out


def _gamma_variates(gen: np.random.Generator, shape: float,
                    count: int) -> np.ndarray:
    """Unit-scale Gamma(shape) variates for any shape > 0."""
    if shape >= 1.0:
        return _gamma_marsaglia_tsang(gen, shape, count)
    boosted = _gamma_marsaglia_tsang(gen, shape + 1.0, count)
    u = _uniform_open(gen, count)
    return boosted * u ** (1.0 / shape)


def _gj_values(gen: np.random.Generator, law: GjLaw,
               count: int) -> np.ndarray:
    m = law.m
    scale = (m ** m * law.t) ** (1.0 / (m * (m - 1.0)))
    x = _gamma_variates(gen, law.j / m, count)
    return scale * x ** (1.0 / m)


def _check_count(count: int) -> None:
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise DomainError(f"count must be an integer >= 1, got {count!r}")


def sample_gj(law: GjLaw, rng: RngStream, count: int) -> SampleBatch:
    """Draws from one Gamma-power factor of the product representation."""
    _check_count(count)
    values = _gj_values(rng.generator(), law, count)
    meta = BatchMeta(law=f"gj(m={law.m}, j={law.j}, t={law.t})",
                     count=count, seed=rng.seed, stream_id=rng.stream_id)
    return SampleBatch(values=values, meta=meta)


def sample_time_product(m: int, t: float, rng: RngStream,
                        count: int) -> SampleBatch:
    """Draws of the random time at ``alpha = 1/m`` as a product of
    ``m - 1`` independent Gamma-power factors (one shared stream,
    factors consumed in the order ``j = 1..m-1``)."""
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise DomainError(f"m must be an integer >= 2, got {m!r}")
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}")
    _check_count(count)
    gen = rng.generator()
    values = np.ones(count)
    for j in range(1, m):
        values = values * _gj_values(gen, GjLaw(m=m, j=j, t=t), count)
    meta = BatchMeta(law=f"time_product(m={m}, t={t})", count=count,
                     seed=rng.seed, stream_id=rng.stream_id)
    return SampleBatch(values=values, meta=meta)


def sample_reflecting_bm(t: float, rng: RngStream, count: int) -> SampleBatch:
    """Draws of ``|N(0, 2t)|``: the random time at ``alpha = 1/2``,
    i.e. Brownian motion reflected at the origin."""
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}")
    _check_count(count)
    gen = rng.generator()
    values = np.abs(gen.standard_normal(count)) * math.sqrt(2.0 * t)
    meta = BatchMeta(law=f"reflecting_bm(t={t})", count=count,
                     seed=rng.seed, stream_id=rng.stream_id)
    return SampleBatch(values=values, meta=meta)


def _resolve_inverse_order(alpha: float) -> int:
    """The integer m with ``alpha = 1/m``, or a DomainError."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    m = round(1.0 / alpha)
    if m < 2 or abs(alpha - 1.0 / m) > 1e-12:
        raise DomainError(
            "sampling supports alpha = 1/m for integer m >= 2 only "
            f"(no general stable sampler), got alpha = {alpha}")
    return m


def sample_composed_bm(alpha: float, t: float, rng: RngStream,
                       count: int) -> SampleBatch:
    """Draws of the diffusion at an independent random time: ``U ~ T_alpha``
    followed by ``X ~ N(0, 2U)``.  Supported orders are ``alpha = 1/m``."""
    m = _resolve_inverse_order(alpha)
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}")
    _check_count(count)
    gen = rng.generator()
    if m == 2:
        times = np.abs(gen.standard_normal(count)) * math.sqrt(2.0 * t)
    else:
        times = np.ones(count)
        for j in range(1, m):
            times = times * _gj_values(gen, GjLaw(m=m, j=j, t=t), count)
    values = gen.standard_normal(count) * np.sqrt(2.0 * times)
    meta = BatchMeta(law=f"composed_bm(alpha=1/{m}, t={t})", count=count,
                     seed=rng.seed, stream_id=rng.stream_id)
    return SampleBatch(values=values, meta=meta)


# ---------------------------------------------------------------------------
# analytic CDFs and goodness-of-fit helpers
# ---------------------------------------------------------------------------

def gj_cdf(law: GjLaw):
    """CDF of one Gamma-power factor: a regularized incomplete gamma in
    the transformed variable ``(w / scale)^m``."""
    m = law.m
    scale = (m ** m * law.t) ** (1.0 / (m * (m - 1.0)))
    a = law.j / m

    def cdf(w):
        w = np.asarray(w, dtype=float)
        return gammainc(a, np.where(w > 0.0, w / scale, 0.0) ** m)

    return cdf


def reflecting_cdf(t: float):
    """CDF of ``|N(0, 2t)|``: ``erf(w / (2 sqrt(t)))`` for ``w >= 0``."""
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t}")
    root = 2.0 * math.sqrt(t)

    def cdf(w):
        w = np.asarray(w, dtype=float)
        return np.where(w > 0.0, erf(w / root), 0.0)

    return cdf


def ks_statistic(values: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup-distance against a callable CDF."""
    return float(kstest(values, cdf).statistic)


def ks_critical(count: int, level: float = 0.05) -> float:
    """Asymptotic two-sided KS critical value ``c(level) / sqrt(count)``
    (``c = sqrt(-ln(level / 2) / 2)``, e.g. 1.358 at 5 percent)."""
    _check_count(count)
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    return math.sqrt(-0.5 * math.log(0.5 * level)) / math.sqrt(count)
