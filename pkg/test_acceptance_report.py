"""
Test Acceptance Report
Seeded checks at a small scale and the summary table
"""

from acceptance_report import CHECKS, AcceptanceReport


def test_every_check_passes_at_small_scale():
    results = AcceptanceReport(seed=7, scale=0.1).run_report()
    table = results["table"]
    assert list(table["Criterion"]) == [name for name, _, _ in CHECKS]
    assert results["all_passed"], table.to_string()


def test_filtered_report():
    results = AcceptanceReport(seed=3).run_report(only=["I_< expression", "Reified I_tern expression"])
    assert len(results["table"]) == 2
    assert list(results["table"]["Passed"]) == [6, 4]


def test_print_results(capsys):
    report = AcceptanceReport(seed=1, scale=0.1)
    report.print_results(report.run_report(only=["Chase fidelity"]))
    out = capsys.readouterr().out
    assert "ACCEPTANCE SUMMARY" in out
    assert "all checks passed" in out


def test_full_scale_case_counts():
    counts = {name: cases for name, _, cases in CHECKS}
    assert counts["Reify/chase commutation"] == 200
    assert counts["td -> cw"] == 100
    assert counts["Recoloring"] == 50
    assert counts["Disconnected saturation"] == 100
    assert counts["Grid rewriting vs chase"] == 200
    assert counts["Datalog preservation"] == 100


def test_grid_oracle_runs_at_full_budget():
    results = AcceptanceReport(seed=5, scale=0.02).run_report(only=["Grid rewriting vs chase"])
    assert list(results["table"]["Passed"]) == [4]
