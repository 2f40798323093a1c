"""Allocation and enumeration budgets.

The dense-allocation cap is read from ``REPVAL_BUDGET_MB`` (default 2048).
"""
import os

from .errors import BudgetExceeded

DEFAULT_BUDGET_MB = 2048

# enumeration caps (number of candidates / LP entries)
BRUTEFORCE_BUDGET = 2**32
LP_BUDGET = 4_000_000
PREDICATE_DENSE_LIMIT = 2**20
MATERIALIZE_LIMIT = 2**24


def budget_bytes():
    raw = os.environ.get("REPVAL_BUDGET_MB")
    mb = float(raw) if raw else DEFAULT_BUDGET_MB
    return int(mb * 2**20)


def check_alloc(n_elements, itemsize=16, what="dense array"):
    """Raise BudgetExceeded if ``n_elements * itemsize`` bytes exceeds the cap."""
    needed = int(n_elements) * int(itemsize)
    limit = budget_bytes()
    if needed > limit:
        raise BudgetExceeded(what + " (bytes)", needed, limit)


def check_count(count, limit, what):
    if count > limit:
        raise BudgetExceeded(what, int(count), int(limit))
