"""End-to-end scripted runs against their frozen event streams."""

import pytest

from conformance_cases import CASES, check_case, run_case


@pytest.mark.parametrize("case", CASES, ids=[c["name"] for c in CASES])
def test_scripted_run_matches_frozen_events(case):
    check_case(case, run_case(case))
