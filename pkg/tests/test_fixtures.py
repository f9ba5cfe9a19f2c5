from __future__ import annotations

from fractions import Fraction

import pytest

from confinit.fixtures import Check, clustering_fixture, detection_fixture, exact_aggregate


def test_exact_aggregates_from_walkthrough():
    assert exact_aggregate(15, [(16, 1)]) == Fraction(31, 2)
    assert exact_aggregate(16, [(15, 1), (18, 1)]) == Fraction(49, 3)
    assert exact_aggregate(24, [(21, 1)]) == Fraction(45, 2)
    assert exact_aggregate(22, [(20, 1), (23, 1)]) == Fraction(65, 3)


def test_clustering_fixture_passes():
    checks = clustering_fixture()
    assert len(checks) == 10 + 1 + 1 + 2
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


@pytest.mark.parametrize("engine", ["reference", "fast"])
def test_detection_fixture_passes(engine):
    checks = detection_fixture(engine)
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


def test_check_line():
    assert Check("f", "x", True).line() == "PASS  f: x"
    assert Check("f", "x", False, "why").line() == "FAIL  f: x  (why)"
