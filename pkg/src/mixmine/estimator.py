"""scikit-learn style estimators.

:class:`Apriori` mines one database in the clear.  :class:`SecureApriori`
splits the rows over simulated sites and mines them through the mixer
protocol.  The two give identical itemsets, counts and rules.  Both are
transformers: ``transform`` turns transactions into a 0/1 matrix with one
column per frequent itemset, so they slot into a ``Pipeline``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, check_groups, check_seed, check_transactions
from .datasets import derive_modulus, partition
from .mining import TransactionDB, apriori, generate_rules
from .protocol import SessionConfig
from .securesum import validate_params
from .session import run_session


class Apriori(TransformerMixin, BaseEstimator):
    """Centralized Apriori.

    Parameters
    ----------
    min_support : float, default=0.5
        Minimum fraction of transactions an itemset must appear in.
    min_confidence : float, default=0.8
        Minimum confidence of an emitted rule.
    item_universe : sequence of int, optional
        Items to consider.  Defaults to every item seen in ``fit``.

    Attributes
    ----------
    frequent_itemsets_ : list of FrequentSet
        L_1, L_2, ... with global support counts.
    itemsets_ : list of tuple
        All frequent itemsets in output-column order.
    rules_ : list of Rule
    n_transactions_ : int
    """

    def __init__(self, min_support=0.5, min_confidence=0.8, item_universe=None):
        self.min_support = min_support
        self.min_confidence = min_confidence
        self.item_universe = item_universe

    def _check_params(self):
        check_fraction("min_support", self.min_support)
        check_fraction("min_confidence", self.min_confidence)

    def fit(self, X, y=None):
        self._check_params()
        db = check_transactions(X)
        levels = apriori(db, self.min_support, self.item_universe)
        self._set_result(levels, generate_rules(levels, db.size, self.min_confidence) if db.size else [], db.size)
        return self

    def _set_result(self, levels, rules, total):
        self.frequent_itemsets_ = levels
        self.itemsets_ = [s for fs in levels for s, _ in fs.entries]
        self.support_counts_ = {s: n for fs in levels for s, n in fs.entries}
        self.rules_ = rules
        self.n_transactions_ = total

    def transform(self, X):
        """Indicator matrix: ``out[i, j] = 1`` iff transaction ``i`` contains itemset ``j``."""
        check_is_fitted(self, "itemsets_")
        db = check_transactions(X)
        out = np.zeros((db.size, len(self.itemsets_)), dtype=np.int8)
        for i, tx in enumerate(db._sets):
            for j, s in enumerate(self.itemsets_):
                if tx.issuperset(s):
                    out[i, j] = 1
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "itemsets_")
        return np.asarray(["itemset_" + "_".join(map(str, s)) for s in self.itemsets_], dtype=object)


class SecureApriori(Apriori):
    """Apriori over N simulated sites that share only masked counts.

    Parameters
    ----------
    n_sites : int, default=3
        Number of data sites (at least 3).  Ignored when ``groups`` is given
        to ``fit``.
    min_support, min_confidence, item_universe
        As for :class:`Apriori`.
    seed : str, bytes or Seed, optional
        Shared 80-bit keystream seed (hex string accepted).  A fresh random
        seed is drawn on every ``fit`` when omitted.
    bit_length : int, default=16
        Width in bits of each keystream field and of an alpha on the wire.
    modulus : int, optional
        Prime modulus.  Defaults to the smallest prime above the row count.
    transport : {"inproc", "tcp"}, default="inproc"
    partition : {"round_robin", "contiguous"}, default="round_robin"
    scheduler_seed : int, default=0
        Delivery-order seed of the in-process scheduler.
    timeout : float, default=30.0

    Attributes
    ----------
    result_ : MiningResult
    metrics_ : ChannelMetrics
    params_ : GroupParams
    site_sizes_ : list of int
    """

    def __init__(
        self,
        n_sites=3,
        min_support=0.5,
        min_confidence=0.8,
        item_universe=None,
        seed=None,
        bit_length=16,
        modulus=None,
        transport="inproc",
        partition="round_robin",
        scheduler_seed=0,
        timeout=30.0,
    ):
        super().__init__(min_support, min_confidence, item_universe)
        self.n_sites = n_sites
        self.seed = seed
        self.bit_length = bit_length
        self.modulus = modulus
        self.transport = transport
        self.partition = partition
        self.scheduler_seed = scheduler_seed
        self.timeout = timeout

    def fit(self, X, y=None, groups=None):
        """Partition ``X`` over the sites and run the protocol.

        ``groups`` assigns each row to a site (one site per distinct label);
        otherwise rows are split by ``partition``.
        """
        self._check_params()
        db = check_transactions(X)
        if groups is not None:
            _, rows = check_groups(groups, db.size)
            dbs = [TransactionDB(tuple(db.transactions[i] for i in idx)) for idx in rows]
        else:
            dbs = partition(db, self.n_sites, self.partition)
        modulus = self.modulus if self.modulus is not None else derive_modulus(max(db.size, 1))
        params = validate_params(modulus, self.bit_length, len(dbs), db.size)
        universe = self.item_universe if self.item_universe is not None else db.items()
        config = SessionConfig(params, self.min_support, self.min_confidence, tuple(universe), check_seed(self.seed))
        result = run_session(
            config, dbs, self.transport, scheduler_seed=self.scheduler_seed, timeout=self.timeout
        )
        self._set_result(result.frequents, result.rules, result.total_size)
        self.result_ = result
        self.metrics_ = result.metrics
        self.params_ = params
        self.site_sizes_ = [d.size for d in dbs]
        return self
