"""Merger rates of the beta(a, b)-coalescent and their moment functionals.

When ``m`` blocks are present, any ``k`` specific blocks merge at rate

    lambda_{m,k} = a^(k-2) b^(m-k) / (a+b)^(m-2)        (rising powers)

The total rate of leaving an ``m``-block state is ``sum_k C(m,k) lambda_{m,k}``
and the block count drops by ``l-1`` with probability proportional to
``C(m,l) lambda_{m,l}``.

The moment functionals

    gamma_n^(k)  = sum_l C(n,l) lambda_{n,l} (l-1)^k
    gamma_n^(k_) = sum_l C(n,l) lambda_{n,l} l(l-1)...(l-k+1)

have exact closed forms through the binomial-type identity for rising
factorials; :func:`gamma_moment` evaluates those and
:func:`gamma_moment_direct` sums the definition term by term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import BudgetError, DomainError, RegimeError
from .specfun import LogValue, log_binomial_array, rising, rising_ratio

#: rate tables hold O(n_max) numbers; rows are rebuilt on demand
DEFAULT_MAX_BLOCKS = 100_000
#: dense triangular materialisation is refused beyond this many rows
DENSE_ROW_LIMIT = 4096
# anchors of the across-row recursion are reset to lgamma values this often
_RENORMALISE_EVERY = 64
# row totals come from the closed form for gamma^(0) unless a is this close to 1 or 2
_SINGULAR_GAP = 1e-3


@dataclass(frozen=True)
class BetaParams:
    """Parameters of the beta(a, b) coalescent.

    ``BetaParams.kingman()`` is the pair-merger limit a -> 0, stored as a=0.
    It bypasses the beta rates (lambda_{m,2}=1, everything else 0) but the
    limit evaluators accept it as the a=0 case of their formulas.
    """

    a: float
    b: float
    is_kingman: bool = False

    def __post_init__(self):
        if self.is_kingman:
            object.__setattr__(self, "a", 0.0)
            object.__setattr__(self, "b", 1.0)
            return
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"beta parameters must be positive, got a={self.a!r}, b={self.b!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("beta parameters must be finite")

    @classmethod
    def kingman(cls) -> "BetaParams":
        return cls(0.0, 1.0, is_kingman=True)

    def comes_down_from_infinity(self) -> bool:
        return self.is_kingman or self.a < 1

    def require_nonsingular(self) -> None:
        """Refuse a in {1, 2}, where the moment asymptotics degenerate."""
        if not self.is_kingman and self.a in (1.0, 2.0):
            raise DomainError(f"moment asymptotics are undefined for a={self.a}")

    def to_dict(self) -> dict:
        if self.is_kingman:
            return {"model": "kingman"}
        return {"model": "beta", "a": self.a, "b": self.b}

    def __str__(self) -> str:
        return "kingman" if self.is_kingman else f"beta(a={self.a:g}, b={self.b:g})"


def merger_rate(params: BetaParams, m: int, k: int) -> LogValue:
    """lambda_{m,k}: rate at which k specific blocks out of m merge."""
    if not (2 <= k <= m):
        raise DomainError(f"need 2 <= k <= m, got m={m}, k={k}")
    if params.is_kingman:
        return LogValue(0.0, 1) if k == 2 else LogValue(-math.inf, 0)
    a, b = params.a, params.b
    return rising(a, k - 2) * rising(b, m - k) / rising(a + b, m - 2)


@dataclass(frozen=True, eq=False)
class RateTable:
    """Merger rates for 2 <= k <= m <= n_max.

    Only per-row quantities are stored: the anchor ``log lambda_{m,2}``, the
    total rate of leaving an ``m``-block state and the probability that the
    next merger is a pair merger.  Full rows come from the in-row recursion
    on request.
    """

    params: BetaParams
    n_max: int
    log_anchor: np.ndarray = field(repr=False)
    row_totals: np.ndarray = field(repr=False)
    pair_prob: np.ndarray = field(repr=False)

    def log_row(self, m: int) -> np.ndarray:
        """ln lambda_{m,k} for k = 2..m (index 0 is k=2)."""
        if not (2 <= m <= self.n_max):
            raise DomainError(f"row m={m} outside 2..{self.n_max}")
        return _log_row(self.params, m, float(self.log_anchor[m]))

    def log_lambda(self, m: int, k: int) -> float:
        if not (2 <= k <= m):
            raise DomainError(f"need 2 <= k <= m, got m={m}, k={k}")
        return float(self.log_row(m)[k - 2])

    def dense_log(self) -> np.ndarray:
        """(n_max+1, n_max+1) array of ln lambda_{m,k}; NaN outside 2<=k<=m."""
        if self.n_max > DENSE_ROW_LIMIT:
            raise BudgetError(f"dense table with {self.n_max} rows exceeds limit {DENSE_ROW_LIMIT}")
        out = np.full((self.n_max + 1, self.n_max + 1), np.nan)
        for m in range(2, self.n_max + 1):
            out[m, 2 : m + 1] = self.log_row(m)
        return out

    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray, float, float]:
        """Inputs of the simulation kernels: totals, pair probabilities, a, b."""
        return self.row_totals, self.pair_prob, float(self.params.a), float(self.params.b)


def _log_row(params: BetaParams, m: int, anchor: float) -> np.ndarray:
    if params.is_kingman:
        row = np.full(m - 1, -np.inf)
        row[0] = 0.0
        return row
    a, b = params.a, params.b
    k = np.arange(2, m)  # ratio lambda_{m,k+1}/lambda_{m,k}
    steps = np.log((a + k - 2.0) / (b + m - k - 1.0))
    return anchor + np.concatenate(([0.0], np.cumsum(steps)))


def _direct_log_anchor(a: float, b: float, m: np.ndarray) -> np.ndarray:
    # ln lambda_{m,2} = ln b^(m-2) - ln (a+b)^(m-2)
    j = m - 2.0
    return (gammaln(b + j) - gammaln(b)) - (gammaln(a + b + j) - gammaln(a + b))


def build_rate_table(params: BetaParams, n_max: int, *, max_blocks: int = DEFAULT_MAX_BLOCKS) -> RateTable:
    """Fill the rate table with the across-row and in-row recursions."""
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    if n_max > max_blocks:
        raise BudgetError(f"n_max={n_max} exceeds the configured budget of {max_blocks} blocks")
    anchors = np.full(n_max + 1, np.nan)
    totals = np.full(n_max + 1, np.nan)
    pair = np.full(n_max + 1, np.nan)
    ms = np.arange(2, n_max + 1)

    if params.is_kingman:
        anchors[2:] = 0.0
        totals[2:] = ms * (ms - 1) / 2.0
        pair[2:] = 1.0
    else:
        a, b = params.a, params.b
        # lambda_{m+1,2} = (b+m-2)/(a+b+m-2) lambda_{m,2}, reset every few rows
        for start in range(2, n_max + 1, _RENORMALISE_EVERY):
            stop = min(start + _RENORMALISE_EVERY, n_max + 1)
            base = _direct_log_anchor(a, b, np.array([float(start)]))[0]
            mm = np.arange(start, stop - 1, dtype=float)
            steps = np.log((b + mm - 2.0) / (a + b + mm - 2.0))
            anchors[start:stop] = base + np.concatenate(([0.0], np.cumsum(steps)))
        closed_form = abs(a - 1.0) > _SINGULAR_GAP and abs(a - 2.0) > _SINGULAR_GAP
        for m in range(2, n_max + 1):
            log_pair = math.log(m * (m - 1) / 2.0) + anchors[m]
            if closed_form:
                log_total = math.log(_gamma0(params, m))
            else:
                log_terms = log_binomial_array(m, np.arange(2, m + 1)) + _log_row(params, m, anchors[m])
                log_total = logsumexp(log_terms)
            totals[m] = math.exp(log_total)
            pair[m] = math.exp(log_pair - log_total)
    for arr in (anchors, totals, pair):
        arr.setflags(write=False)
    return RateTable(params, n_max, anchors, totals, pair)


def merger_size_pmf(table: RateTable, m: int) -> np.ndarray:
    """P(next merger joins l blocks | m blocks) for l = 2..m (index 0 is l=2)."""
    if not (2 <= m <= table.n_max):
        raise DomainError(f"m={m} outside 2..{table.n_max}")
    if table.params.is_kingman:
        p = np.zeros(m - 1)
        p[0] = 1.0
        return p
    log_terms = log_binomial_array(m, np.arange(2, m + 1)) + table.log_row(m)
    p = np.exp(log_terms - logsumexp(log_terms))
    return p / p.sum()


# ---------------------------------------------------------------- moments

def _kingman_moment(n: int, k: int, kind: str) -> float:
    pairs = n * (n - 1) / 2.0
    if kind == "power":
        return pairs  # (l-1)^k = 1 at l = 2
    return pairs * {1: 2.0, 2: 2.0, 3: 0.0}[k]


def gamma_moment(params: BetaParams, n: int, k: int, kind: str = "power") -> float:
    """Exact gamma_n^(k) (``kind='power'``) or gamma_n^(k_) (``kind='falling'``)."""
    _check_moment_args(params, n, k, kind)
    if params.is_kingman:
        return _kingman_moment(n, k, kind)
    if kind == "falling":
        return _falling_moment(params, n, k)
    g0 = _gamma0(params, n)
    if k == 0:
        return g0
    g1 = _falling_moment(params, n, 1) - g0
    if k == 1:
        return g1
    if k == 2:
        return _falling_moment(params, n, 2) - g1
    # (l-1)^3 = l(l-1)(l-2) + (l-1)
    return _falling_moment(params, n, 3) + g1


def _check_moment_args(params: BetaParams, n: int, k: int, kind: str) -> None:
    if kind not in ("power", "falling"):
        raise DomainError(f"kind must be 'power' or 'falling', got {kind!r}")
    valid_k = (0, 1, 2, 3) if kind == "power" else (1, 2, 3)
    if k not in valid_k:
        raise DomainError(f"k={k} not supported for kind={kind!r}")
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    params.require_nonsingular()


def _gamma0(params: BetaParams, n: int) -> float:
    a, b = params.a, params.b
    first = rising_ratio(a + b - 2.0, n, a + b, n - 2)
    second = rising_ratio(b, n - 1, a + b, n - 2) * ((1.0 - a) * n + 1.0 - b)
    return (first + second) / ((1.0 - a) * (2.0 - a))


def _falling_moment(params: BetaParams, n: int, k: int) -> float:
    a, b = params.a, params.b
    if k == 1:
        diff = rising_ratio(a + b - 1.0, n - 1, a + b, n - 2) - rising_ratio(b, n - 1, a + b, n - 2)
        return -n / (1.0 - a) * diff
    if k == 2:
        return float(n * (n - 1))
    # general k >= 2: (a-2)^(k) n_(k) (a+b+k-2)^(n-k) / ((a-2)(a-1)(a+b)^(n-2))
    if n < k:
        return 0.0
    val = rising(a - 2.0, k) * rising(a + b + k - 2.0, n - k) / rising(a + b, n - 2)
    n_falling = math.prod(range(n - k + 1, n + 1))
    return val.value * n_falling / ((a - 2.0) * (a - 1.0))


def gamma_moment_direct(params: BetaParams, n: int, k: int, kind: str = "power") -> float:
    """O(n) summation of the defining series; an independent check of :func:`gamma_moment`."""
    _check_moment_args(params, n, k, kind)
    ls = np.arange(2, n + 1)
    if params.is_kingman:
        log_terms = np.where(ls == 2, math.log(n * (n - 1) / 2.0), -np.inf)
    else:
        a, b = params.a, params.b
        log_lam = (gammaln(a + ls - 2.0) - gammaln(a)) + (gammaln(b + n - ls) - gammaln(b)) \
            - (gammaln(a + b + n - 2.0) - gammaln(a + b))
        log_terms = log_binomial_array(n, ls) + log_lam
    if kind == "power":
        weights = (ls - 1.0) ** k
    else:
        weights = np.ones_like(ls, dtype=float)
        for j in range(k):
            weights = weights * (ls - j)
    return math.fsum(np.exp(log_terms) * weights)


@dataclass(frozen=True)
class GammaMoments:
    n: int
    gamma: dict
    gamma_falling: dict


def gamma_moments(params: BetaParams, n: int) -> GammaMoments:
    return GammaMoments(
        n,
        {k: gamma_moment(params, n, k, "power") for k in (0, 1, 2, 3)},
        {k: gamma_moment(params, n, k, "falling") for k in (1, 2, 3)},
    )


def gamma_asymptotic_constant(params: BetaParams, k: int) -> tuple[float, float]:
    """(C, p) with gamma_n^(k) ~ C n^p as n -> infinity.

    k=0: Gamma(a+b)/((2-a)Gamma(b)) n^(2-a) for a<2, and the constant
         (a+b-1)(a+b-2)/((a-1)(a-2)) for a>2.
    k=1: Gamma(a+b)/((1-a)(2-a)Gamma(b)) n^(2-a) for a<1, ((a+b-1)/(a-1)) n for a>1.
    k=3: a/(a+b) n^3.
    """
    if params.is_kingman:
        raise RegimeError("asymptotic constants are defined for beta parameters only")
    params.require_nonsingular()
    a, b = params.a, params.b
    lg = math.lgamma(a + b) - math.lgamma(b)
    if k == 0:
        if a < 2:
            return math.exp(lg) / (2.0 - a), 2.0 - a
        return (a + b - 1.0) * (a + b - 2.0) / ((a - 1.0) * (a - 2.0)), 0.0
    if k == 1:
        if a < 1:
            return math.exp(lg) / ((1.0 - a) * (2.0 - a)), 2.0 - a
        return (a + b - 1.0) / (a - 1.0), 1.0
    if k == 3:
        return a / (a + b), 3.0
    raise DomainError(f"no asymptotic constant for k={k}")


@lru_cache(maxsize=None)
def drift_constants(params: BetaParams) -> tuple[float, float]:
    """(G_full, K): the Bernoulli drift G_full = K/(1-a) and K = Gamma(a+b)/((2-a)Gamma(b)).

    In Kingman mode both come out as 1/2 (a=0).
    """
    a, b = params.a, params.b
    if params.is_kingman:
        return 0.5, 0.5
    if a >= 1:
        raise RegimeError(f"drift constants need a < 1, got a={a}")
    k_const = math.exp(math.lgamma(a + b) - math.lgamma(b)) / (2.0 - a)
    return k_const / (1.0 - a), k_const
