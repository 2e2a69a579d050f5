"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

The lines are printed with capture disabled, so they show up in plain
``pytest -v`` output.  Sub-checks that fail are listed underneath.
"""

import pytest

from fracdamp.acceptance import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    title, fn = CRITERIA[number]
    checks = fn()
    assert checks, "criterion produced no checks"
    ok = all(c.passed for c in checks)
    with capsys.disabled():
        print(f"\nCRITERION {number} {'PASS' if ok else 'FAIL'}: {title} ({len(checks)} checks)")
        for c in checks:
            if not c.passed:
                print(f"    failed: {c.name}: measured {c.measured:.6g}, expected {c.expected}")
    assert ok, "; ".join(f"{c.name}: {c.measured:.6g} vs {c.expected}" for c in checks if not c.passed)
