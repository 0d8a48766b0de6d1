"""Full acceptance battery: one test, and one printed verdict line, per
numbered criterion.

Runs everything at the pinned master seed used by `spindist verify-all`.
Slow by design (minutes, not seconds); run the rest of the suite with
`pytest --ignore tests/test_acceptance.py` for quick iteration.
"""

import pytest

from spindist.accept import CRITERIA, run_criterion
from spindist.results import format_rows

MASTER_SEED = 7


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    description, _ = CRITERIA[number]
    rows = run_criterion(number, seed=MASTER_SEED)
    verdict = "PASS" if all(r.passed is not False for r in rows) else "FAIL"
    print(f"\ncriterion {number:02d} [{verdict}] {description}")
    print(format_rows(rows))
    failures = [r.quantity for r in rows if r.passed is False]
    assert not failures, (
        f"criterion {number} ({description}): failing rows {failures}"
    )
