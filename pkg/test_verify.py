#!/usr/bin/env python3
"""The property suite is deterministic and passes for fixed seeds."""

import numpy as np
import pytest

import verify


@pytest.mark.parametrize('check', verify.CHECKS, ids=lambda c: c.__name__)
def test_each_check_passes(check):
    result = check(np.random.default_rng(11))
    assert result.passed, f"{result.name}: {result.detail}"


def test_suite_is_deterministic():
    first = verify.run_suite(7)
    second = verify.run_suite(7)
    assert [(r.name, r.passed, r.detail) for r in first] == [(r.name, r.passed, r.detail) for r in second]
    assert all(r.passed for r in first)
