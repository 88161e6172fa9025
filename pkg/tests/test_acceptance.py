"""Acceptance gate: every numbered criterion at its stated tolerance.

Each criterion gets exactly one test (plus one strict-xfail clause), so
`pytest tests/test_acceptance.py -v` reads as one pass/fail line per
criterion; add -rA to see the measured values behind each verdict. The
scenario runs behind the checks are shared module-scoped fixtures.

The expected failure, spelled out: the unit-speed family member with the
scalar profile on its first sech power (the "as_printed_sech" variant)
cannot satisfy the matter equation. The coupling term M phi psi carries
the scalar profile into the matter equation, where that profile leaves a
resolution-independent relative defect with continuum value 4/27. The
sech^2 variant satisfies both equations below 1e-6, and criterion 3
requires the report to present that contrast explicitly.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from solitonlab.config import apply_overrides, default_config
from solitonlab.evolution import (
    evolve, reverse_state, stability_limit, state_from_solution,
)
from solitonlab.model import FieldState, PhysicalParams, make_grid
from solitonlab.runner import run_scenario
from solitonlab.solutions import sample_solution, spec_1d_b

P = PhysicalParams(M=1.0, m=0.5, v=1.0)


def _run(tmp_path_factory, scenario, *overrides):
    cfg = apply_overrides(default_config(scenario), list(overrides))
    out = tmp_path_factory.mktemp(scenario)
    return run_scenario(cfg, out_dir=out), out


@pytest.fixture(scope="module")
def audit(tmp_path_factory):
    report, _ = _run(tmp_path_factory, "verify-residuals")
    return report


@pytest.fixture(scope="module")
def propagation_4096(tmp_path_factory):
    report, _ = _run(tmp_path_factory, "soliton-propagation", "grid.n=4096")
    return report


@pytest.fixture(scope="module")
def propagation_3db(tmp_path_factory):
    report, _ = _run(tmp_path_factory, "soliton-propagation",
                     "soliton.family=3d_b")
    return report


@pytest.fixture(scope="module")
def spreading(tmp_path_factory):
    report, _ = _run(tmp_path_factory, "free-spreading")
    return report


@pytest.fixture(scope="module")
def yukawa(tmp_path_factory):
    report, _ = _run(tmp_path_factory, "yukawa-oracle")
    return report


@pytest.fixture(scope="module")
def choquard(tmp_path_factory):
    report, _ = _run(tmp_path_factory, "choquard-stationary")
    return report


@pytest.fixture(scope="module")
def perturbation(tmp_path_factory):
    report, out = _run(tmp_path_factory, "perturbation-stability")
    return report, out


def _assert_criterion(report, tag):
    checks = [c for c in report.checks if c.criterion == tag]
    assert checks, f"scenario produced no checks tagged {tag}"
    for c in checks:
        verdict = "PASS" if c.passed else "FAIL"
        print(f"[{verdict}] {tag}: {c.description}: "
              f"{c.value:.6g} {c.comparison} {c.threshold:g}")
    failed = [c.description for c in checks if not c.passed]
    assert not failed, f"{tag} failed: {failed}"
    return checks


def test_criterion_01_bright_envelope_residuals(audit):
    _assert_criterion(audit, "criterion-1")
    print(f"[PASS] criterion-1: audit wall time {audit.wall_time:.2f} s < 60")
    assert audit.wall_time < 60.0


def test_criterion_02_moving_member_residuals_and_speed(audit,
                                                        propagation_3db):
    _assert_criterion(audit, "criterion-2")
    checks = _assert_criterion(propagation_3db, "criterion-2")
    # the evolved-velocity clause must actually be among them
    assert any("evolved translation speed" in c.description for c in checks)


def test_criterion_03_profile_contrast(audit):
    _assert_criterion(audit, "criterion-3")
    contrast = [f for f in audit.findings if "profile contrast" in f]
    assert contrast, "report must present the profile contrast explicitly"
    print(f"note: {contrast[0]}")


@pytest.mark.xfail(strict=True, reason=(
    "the as_printed_sech scalar profile leaves a resolution-independent "
    "matter-equation defect (continuum 4/27 ~ 0.148) through the coupling "
    "term M phi psi; only the sech^2 variant solves the matter equation"))
def test_criterion_03_printed_profile_passes_matter_equation(audit):
    entry = next(e for e in audit.details["family_audit"]
                 if e["family"] == "1d_a" and e["phi_profile"] == "sech")
    value = entry["matter"]["rel_residual"]
    print(f"[FAIL] criterion-3: printed-profile matter residual "
          f"{value:.6g} < 1e-06 (expected failure, continuum 4/27 "
          f"= {4 / 27:.6g})")
    assert value < 1e-6


def test_criterion_04_normalization(audit):
    _assert_criterion(audit, "criterion-4")


def test_criterion_05_soliton_propagation(propagation_4096):
    _assert_criterion(propagation_4096, "criterion-5")
    print(f"[PASS] criterion-5: wall time at n=4096 "
          f"{propagation_4096.wall_time:.2f} s < 60")
    assert propagation_4096.wall_time < 60.0


def test_criterion_06_localization_contrast(spreading):
    checks = _assert_criterion(spreading, "criterion-6")
    by_desc = {c.description: c for c in checks}
    law = next(c for d, c in by_desc.items() if "law" in d)
    ratio = next(c for d, c in by_desc.items() if "relative width" in d)
    assert law.threshold == 0.005
    assert ratio.threshold == 0.5


def test_criterion_07_yukawa_oracle(yukawa):
    checks = _assert_criterion(yukawa, "criterion-7")
    dims = {c.description.split()[0] for c in checks}
    assert {"1D", "3D"} <= dims, "both lattice dimensionalities must run"
    assert any("constant" in c.description for c in checks)
    print(f"[PASS] criterion-7: oracle wall time {yukawa.wall_time:.2f} s")
    assert yukawa.wall_time < 120.0


def test_criterion_08_choquard_stationarity(choquard):
    checks = _assert_criterion(choquard, "criterion-8")
    depth = next(c for c in checks if "depth ratio" in c.description)
    assert depth.passed
    assert any("slaved scalar depth" in f for f in choquard.findings)


def test_criterion_09_scheme_properties():
    grid = make_grid(1, 1024, 60.0)
    dt = 1.0 / math.ceil(1.0 / (0.9 * stability_limit(grid, P)))

    # norm conservation per unit time on arbitrary data
    rng = np.random.default_rng(11)
    psi = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    psi /= math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.spacing)
    state = FieldState(t=0.0, psi=psi, phi=rng.standard_normal(grid.n) * 0.1,
                       params=P, grid=grid)
    traj = evolve(state, T=1.0, dt=dt)
    drift_rate = abs(traj.final.norm() - state.norm()) / 1.0
    print(f"[PASS] criterion-9: norm drift per unit time on random data "
          f"{drift_rate:.3g} < 1e-10")
    assert drift_rate < 1e-10

    # time reversal over T = 10
    dt10 = 10.0 / math.ceil(10.0 / (0.9 * stability_limit(grid, P)))
    start = state_from_solution(spec_1d_b(P), P, grid, dt=dt10)
    fwd = evolve(start, T=10.0, dt=dt10)
    back = evolve(reverse_state(fwd.final, dt10), T=10.0, dt=dt10)
    reversal = float(np.max(np.abs(np.conj(back.final.psi) - start.psi)))
    print(f"[PASS] criterion-9: reversal mismatch after T=10 out and back "
          f"{reversal:.3g} < 1e-6")
    assert reversal < 1e-6

    # second order in dt: halving the step divides the error by 4 +- 0.5
    ana = sample_solution(spec_1d_b(P), P, grid, t=1.0)
    errs = []
    for steps in (640, 1280, 2560):
        h = 1.0 / steps
        st = state_from_solution(spec_1d_b(P), P, grid, dt=h)
        errs.append(float(np.max(np.abs(
            evolve(st, T=1.0, dt=h).final.psi - ana.psi))))
    ratios = [c / f for c, f in zip(errs, errs[1:])]
    print(f"[PASS] criterion-9: dt-halving error ratios "
          f"{[f'{r:.2f}' for r in ratios]} within 4 +- 0.5")
    for r in ratios:
        assert r == pytest.approx(4.0, abs=0.5)


def test_criterion_10_perturbation_harness(perturbation):
    report, out = perturbation
    _assert_criterion(report, "criterion-10")
    assert (out / "observables.csv").exists()
    assert (out / "observables_repeat.csv").exists()
    assert (out / "observables.csv").read_bytes() \
        == (out / "observables_repeat.csv").read_bytes()
    classified = [f for f in report.findings
                  if "survived" in f or "dispersed" in f]
    assert classified, "the run must classify the perturbed soliton"
    print(f"note: {classified[0]}")
