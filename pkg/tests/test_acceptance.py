"""Full-scale acceptance grid: one pass/fail line per criterion.

Sample sizes and tolerances are the pinned ones from ``gbm_integrals.acceptance``.
Deselect with ``-m "not acceptance"`` for a quick run.
"""

import pytest

from gbm_integrals import acceptance

from .conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    result = acceptance.CRITERIA[number]()
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, line
