"""Acceptance criteria, one test per criterion, printing a pass/fail line per
row.  Tolerances are fixed by the criteria; nothing is tuned at run time.

The Monte Carlo criteria (5 and 6) run 2e5 paths at dt = 1e-4 and take a few
minutes; everything else is fast.
"""

import pytest

from dynkin import acceptance as acc


@pytest.fixture(scope="module")
def run():
    return acc.CorpusRun()


def _report(rows):
    lines = []
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.criterion} {r.example}: {r.detail}")
    print()
    for line in lines:
        print(line)
    assert all(r.passed for r in rows), "\n".join(lines)


def test_criterion_1_value_ex_4_4(run):
    _report(acc.criterion_1_value_ex_4_4(run))


def test_criterion_2_value_ex_4_2(run):
    _report(acc.criterion_2_value_ex_4_2(run))


def test_criterion_3_strategy_ex_4_3(run):
    _report(acc.criterion_3_strategy_ex_4_3(run))


def test_criterion_4_threshold_ex_5_1(run):
    _report(acc.criterion_4_threshold_ex_5_1(run))


def test_criterion_5_mc_values(run):
    _report(acc.criterion_5_mc_values(run))


def test_criterion_6_deviation_gains(run):
    _report(acc.criterion_6_deviation_gains(run))


def test_criterion_7_martingale(run):
    _report(acc.criterion_7_martingale(run))


def test_criterion_8_verdicts(run):
    _report(acc.criterion_8_verdicts(run))


def test_criterion_9_oracle(run):
    _report(acc.criterion_9_oracle(run))


def test_criterion_10_properties(run):
    _report(acc.criterion_10_properties(run))
