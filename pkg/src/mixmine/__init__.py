"""Privacy-preserving distributed Apriori with a semi-trusted mixer.

Sites mask their candidate support counts with keystream-derived material,
a mixer adds the masked values, and every site unmasks only the global sum.
"""

from .estimator import Apriori, SecureApriori
from .keystream import KeySchedule, Seed
from .mining import FrequentSet, Rule, TransactionDB, apriori, generate_rules
from .oracle import brute_force_frequent, merge_partitions
from .protocol import SessionConfig
from .securesum import GroupParams, IterationKeys, mask, mix, mod_inverse, unmask, validate_params
from .session import MiningResult, run_session

__version__ = "0.1.0"

__all__ = [
    "Apriori",
    "SecureApriori",
    "KeySchedule",
    "Seed",
    "FrequentSet",
    "Rule",
    "TransactionDB",
    "apriori",
    "generate_rules",
    "brute_force_frequent",
    "merge_partitions",
    "SessionConfig",
    "GroupParams",
    "IterationKeys",
    "mask",
    "mix",
    "mod_inverse",
    "unmask",
    "validate_params",
    "MiningResult",
    "run_session",
]
