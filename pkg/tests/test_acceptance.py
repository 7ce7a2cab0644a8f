"""Acceptance criteria 1-9 at their stated sizes and tolerances.

Each test prints one ``criterion k: PASS/FAIL`` line (collected again in the
terminal summary) and then asserts the verdict.
"""

import time

import pytest

from afbm import experiments as ex
from afbm.cli import EXIT_OK, EXIT_VERDICT, OUTPUT_ENV, main

pytestmark = pytest.mark.slow

# criterion -> runtime budget in seconds (None when no budget is stated)
BUDGETS = {1: 60, 2: None, 3: 60, 4: None, 5: 300, 6: None, 7: None, 8: None}


@pytest.mark.parametrize("k", sorted(ex.CRITERIA))
def test_criterion(k, report_line):
    name, run, verdict = ex.CRITERIA[k]
    start = time.perf_counter()
    rows = run()
    elapsed = time.perf_counter() - start
    ok, summary = verdict(rows)
    budget = BUDGETS[k]
    in_time = budget is None or elapsed < budget
    summary = f"{name}: {summary}; {elapsed:.1f} s" + ("" if budget is None else f" (budget {budget} s)")
    assert report_line(k, ok and in_time, summary)


def test_criterion_9_determinism(tmp_path, monkeypatch, report_line):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    runs = [tmp_path / "first", tmp_path / "second"]
    codes = [main(["full-report", "--output-dir", str(d)]) for d in runs]
    names = sorted(p.name for p in runs[0].glob("*.csv"))
    same = names == sorted(p.name for p in runs[1].glob("*.csv")) and all(
        (runs[0] / n).read_bytes() == (runs[1] / n).read_bytes() for n in names
    )
    ok = same and codes[0] == codes[1] and codes[0] in (EXIT_OK, EXIT_VERDICT)
    summary = f"{len(names)} CSV files byte-identical across two full-report runs: {same} (exit codes {codes})"
    assert report_line(9, ok, summary)
