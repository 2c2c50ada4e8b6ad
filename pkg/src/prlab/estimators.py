"""scikit-learn style wrappers so the statistics compose with pipelines.

Sequences passed to ``fit`` are 1-D arrays holding ``s(1), s(2), ...``;
naturals passed to ``transform`` are single-column arrays.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .correlate import DEFAULT_BATTERY, battery, correlate
from .density import Chain, IndicatorSet, KPlan, chain_density, k_density
from .errors import DomainError
from .seqkernel import SeqBlock, SeqKind, sieve_range
from .sources import CheckpointPlan
from .testlang.parser import parse


def _naturals(X) -> np.ndarray:
    X = check_array(X, dtype=np.int64, ensure_2d=True)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of naturals, got {X.shape[1]} columns")
    return X[:, 0]


def _sequence(X) -> SeqBlock:
    s = column_or_1d(check_array(X, dtype=np.int64, ensure_2d=False), warn=True)
    if np.any(np.abs(s) > 1):
        raise ValueError("sequence values must lie in {-1, 0, +1}")
    return SeqBlock(1, s.size + 1, SeqKind.CUSTOM, s.astype(np.int8))


class ArithmeticSequenceTransformer(TransformerMixin, BaseEstimator):
    """Map each natural n to lambda(n) or mu(n)."""

    def __init__(self, kind="liouville"):
        self.kind = kind

    def fit(self, X=None, y=None):
        self.kind_ = SeqKind.coerce(self.kind)
        if self.kind_ is SeqKind.CUSTOM:
            raise ValueError("kind must be liouville or mobius")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "kind_")
        ns = _naturals(X)
        if ns.size == 0:
            return np.zeros((0, 1), dtype=np.int8)
        if ns.min() < 1:
            raise ValueError("sequences are defined for n >= 1")
        block = sieve_range(1, int(ns.max()) + 1, self.kind_)
        return block.values[ns - 1].reshape(-1, 1)


class TestFunctionTransformer(TransformerMixin, BaseEstimator):
    """Evaluate a test-language expression at each natural n."""

    __test__ = False

    def __init__(self, expression="1"):
        self.expression = expression

    def fit(self, X=None, y=None):
        self.test_ = parse(self.expression)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "test_")
        ns = _naturals(X)
        return self.test_.eval_array(ns).reshape(-1, 1)


class CorrelationEstimator(BaseEstimator):
    """Correlation trace of a fitted sequence with one test function."""

    def __init__(self, test="1", eps=0.05, checkpoints="pow2"):
        self.test = test
        self.eps = eps
        self.checkpoints = checkpoints

    def fit(self, X, y=None):
        block = _sequence(X)
        pts = CheckpointPlan.parse(self.checkpoints).points(block.hi - 1)
        self.trace_ = correlate(block, parse(self.test), pts, eps=self.eps)
        self.norm_n_ = np.asarray(self.trace_.norm_n)
        return self

    def score(self, X, y=None):
        """Negated max |S(n)/n| along the checkpoints (higher is more random-looking)."""
        check_is_fitted(self, "trace_")
        block = _sequence(X)
        pts = CheckpointPlan.parse(self.checkpoints).points(block.hi - 1)
        trace = correlate(block, parse(self.test), pts, eps=self.eps)
        return -float(np.max(np.abs(trace.norm_n)))


class PseudorandomnessBattery(BaseEstimator):
    """Battery verdicts; ``predict`` classifies each row of a 2-D array of sequences."""

    def __init__(self, tests="default", threshold=0.05, burn_in=10_000, checkpoints="pow2"):
        self.tests = tests
        self.threshold = threshold
        self.burn_in = burn_in
        self.checkpoints = checkpoints

    def _tests(self):
        texts = DEFAULT_BATTERY if self.tests == "default" else self.tests
        if isinstance(texts, str):
            texts = [t for t in texts.split(";") if t.strip()]
        return [parse(t) if isinstance(t, str) else t for t in texts]

    def _run(self, block):
        return battery(block, self._tests(), self.threshold, burn_in=self.burn_in,
                       cap=block.hi - 1, checkpoints=self.checkpoints)

    def fit(self, X, y=None):
        self.report_ = self._run(_sequence(X))
        self.passed_ = self.report_.passed
        return self

    def predict(self, X):
        check_is_fitted(self, "report_")
        rows = check_array(X, dtype=np.int64, ensure_2d=True)
        return np.array([self._run(_sequence(row)).passed for row in rows])


class ChainDensityEstimator(BaseEstimator):
    """K-density and chain density of a set given by its indicator on ``[0, N)``."""

    def __init__(self, depth=3, checkpoints="pow2"):
        self.depth = depth
        self.checkpoints = checkpoints

    def fit(self, X, y=None):
        mask = column_or_1d(check_array(X, dtype=bool, ensure_2d=False))
        if mask.size < 3:
            raise DomainError("need an indicator over at least [0, 3)")
        X_set = IndicatorSet(mask)
        K = KPlan(mask.size, CheckpointPlan.parse(self.checkpoints))
        self.k_density_ = k_density(X_set, K)
        self.chain_density_ = chain_density(X_set, Chain.powers_of_two(self.depth), K)
        self.value_ = self.chain_density_.value
        return self
