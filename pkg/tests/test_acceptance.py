"""Acceptance criteria, each at its stated tolerance.

One full validation run at seed 42 is shared by criteria 1-11; criterion 12
repeats it through the command line with 8 threads and compares the reports.
Every test prints a PASS/FAIL line; the lines are also collected into the
terminal summary.
"""

import io

import pytest

from halfway.cli import main
from halfway.stats import kolmogorov_q
from halfway.validation import ValidationReport, run_validation


@pytest.fixture(scope="session")
def report():
    return run_validation(seed=42, full=True, threads=1)


def record(log, number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    print(line)
    log.append(line)
    assert ok, line


def check(report, name):
    return next(c for c in report.checks if c.name == name)


def test_01_three_way_agreement(report, acceptance_log):
    c = check(report, "three_way_density_agreement")
    ok = c.observed <= 1e-6 and c.runtime <= 60.0
    record(acceptance_log, 1, "three-way density agreement", ok,
           f"max rel err {c.observed:.3g} <= 1e-6, {c.runtime:.1f}s <= 60s")


def test_02_normalization(report, acceptance_log):
    c = check(report, "normalization")
    record(acceptance_log, 2, "normalization", c.observed <= 1e-8, f"max |mass - 1| {c.observed:.3g} <= 1e-8")


def test_03_scale_invariance(report, acceptance_log):
    c = check(report, "scale_invariance")
    record(acceptance_log, 3, "scale invariance", c.observed <= 1e-12, f"max rel diff {c.observed:.3g} <= 1e-12")


def test_04_tail_law(report, acceptance_log):
    c = check(report, "tail_law")
    record(acceptance_log, 4, "tail law at y = 1e3 x", c.observed <= 1e-4, f"max rel err {c.observed:.3g} <= 1e-4")


def test_05_tau_sampler(report, acceptance_log):
    c = check(report, "tau_sampler_ks")
    record(acceptance_log, 5, "hitting-time sampler KS", c.observed <= 1.95, f"d_n sqrt(n) {c.observed:.4f} <= 1.95")


def test_06_excursion_sampler(report, acceptance_log):
    c = check(report, "excursion_sampler_ks")
    record(acceptance_log, 6, "excursion-marginal sampler KS", c.observed <= 1.95,
           f"d_n sqrt(n) {c.observed:.4f} <= 1.95")


def test_07_exact_sampler(report, acceptance_log):
    c = check(report, "exact_sampler_ks")
    ok = c.observed <= 1.95 and c.runtime <= 300.0
    record(acceptance_log, 7, "exact halfway sampler KS, 15 pairs", ok,
           f"worst d_n sqrt(n) {c.observed:.4f} <= 1.95, {c.runtime:.1f}s <= 300s")


def test_08a_path_sampler_accuracy(report, acceptance_log):
    c = check(report, "path_sampler")
    record(acceptance_log, "8a", "path simulator KS at dt=1e-3", c.observed <= 0.02,
           f"d_n {c.observed:.5f} <= 0.02")


def test_08b_path_sampler_ladder(report, acceptance_log):
    ks = check(report, "path_sampler").details["ks_bridge_on"]
    ok = all(a > b for a, b in zip(ks, ks[1:]))
    record(acceptance_log, "8b", "dt ladder strictly decreasing", ok, "KS " + " > ".join(f"{v:.5f}" for v in ks))


def test_08c_path_sampler_correction(report, acceptance_log):
    d = check(report, "path_sampler").details
    pairs = list(zip(d["ks_bridge_on"], d["ks_bridge_off"]))
    ok = all(on <= off for on, off in pairs)
    record(acceptance_log, "8c", "bridge correction no worse at each dt", ok,
           ", ".join(f"on {on:.5f} vs off {off:.5f}" for on, off in pairs))


def test_09_censoring(report, acceptance_log):
    c = check(report, "censoring_calibration")
    err = abs(c.observed - c.details["expected"])
    record(acceptance_log, 9, "censoring calibration", err <= 3e-4,
           f"observed {c.observed:.5f}, expected {c.details['expected']:.5f}, diff {err:.2g} <= 3e-4")


def test_10_roundtrip(report, acceptance_log):
    c = check(report, "cdf_quantile_roundtrip")
    record(acceptance_log, 10, "CDF/quantile roundtrip", c.observed <= 1e-8, f"max err {c.observed:.3g} <= 1e-8")


def test_11_kolmogorov(report, acceptance_log):
    q = kolmogorov_q(1.358)
    assert check(report, "ks_p_value_sanity").passed
    record(acceptance_log, 11, "Kolmogorov Q(1.358)", abs(q - 0.05) <= 0.002, f"Q = {q:.5f}, target 0.050 +- 0.002")


def test_12_determinism(report, acceptance_log, tmp_path):
    path = tmp_path / "report.json"
    err = io.StringIO()
    main(["validate", "--full", "--seed", "42", "--threads", "8", "--report", str(path)], out=io.StringIO(), err=err)

    other = ValidationReport.from_json(path.read_text())
    # round-trip the fixture through JSON too, so both sides have the same types
    mine = ValidationReport.from_json(report.to_json())
    same = other.without_timing() == mine.without_timing()
    record(acceptance_log, 12, "determinism across thread counts", same,
           "report at --threads 8 " + ("matches" if same else "differs from") + " --threads 1, timing excluded")
