"""Shared fixtures: the desk-scale platform bank used across modules."""

import pytest

from cordsched.phases import bank_from_ground_truth
from cordsched.workload import Budget, default_workloads

DESK_R_MAX = Budget(8, 8)


@pytest.fixture(scope="session")
def desk_bank():
    """Complete lookahead-filled bank for the synthetic workload stable."""
    return bank_from_ground_truth(default_workloads(), DESK_R_MAX)
