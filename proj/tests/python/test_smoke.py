"""Smoke tests for the python bindings."""
import math
import os

import numpy as np
import pytest

import gridkit

DATA = os.path.join(os.path.dirname(__file__), "..", "..", "data")


def t9_case():
    d = os.path.join(DATA, "t9")
    return gridkit.read_case(
        os.path.join(d, "branches.csv"),
        os.path.join(d, "buses.csv"),
        os.path.join(d, "dispatch.csv"),
        os.path.join(d, "components.json"),
    )


def test_admittance_single_branch():
    Y = gridkit.build_admittance([(1, 2, 0.0, 0.1, 0.0)], 2)
    assert Y.shape == (2, 2)
    assert Y[0, 0] == pytest.approx(-10j)
    assert Y[0, 1] == pytest.approx(10j)
    V = np.array([1.0 + 0j, 1.0 + 0j])
    mis = gridkit.network_mismatch(Y, V, np.zeros(2, dtype=complex))
    assert np.abs(mis).max() < 1e-14


def test_power_flow_converges():
    pf = gridkit.solve_power_flow(t9_case())
    assert pf["iterations"] <= 10
    assert pf["max_mismatch"] < 1e-10
    assert np.abs(pf["V"]).min() > 0.9


def test_linearization_is_stable():
    lin = gridkit.linearize(t9_case())
    assert lin["dominant_re"] < 0.0
    n = lin["A"].shape[0]
    assert lin["B"].shape[0] == n
    assert len(lin["state_labels"]) == n


def test_scalar_lqr_closed_form():
    A = np.array([[-1.0]])
    B = np.array([[1.0]])
    K, X = gridkit.lqr(A, B, np.eye(1), np.eye(1))
    assert K[0, 0] == pytest.approx(-(math.sqrt(2.0) - 1.0), abs=1e-9)
    assert X[0, 0] == pytest.approx(math.sqrt(2.0) - 1.0, abs=1e-9)


def test_sweep_reports_points():
    res = gridkit.sweep(t9_case(), "gamma_pv", [2.0, 3.0], threads=1)
    assert len(res["points"]) == 2
    assert all(p["ok"] for p in res["points"])


def test_frequency_response_peak_in_band():
    omega = [2 * math.pi * f for f in np.geomspace(0.02, 2.0, 80)]
    fr = gridkit.frequency_response(t9_case(), 10, omega)
    peak_hz = fr["peak_omega"] / (2 * math.pi)
    assert 0.05 < peak_hz < 1.0


def test_simulate_scenario(tmp_path):
    scn = tmp_path / "case.scn"
    d = os.path.abspath(os.path.join(DATA, "t9"))
    scn.write_text(
        f"branches = {d}/branches.csv\n"
        f"buses = {d}/buses.csv\n"
        f"dispatch = {d}/dispatch.csv\n"
        f"components = {d}/components.json\n"
        "t_end = 1.0\n"
        "dt = 0.01\n"
        "fault = impulse bus=11 state=i_d scale=2.0 t=0.2\n"
    )
    tr = gridkit.simulate(str(scn))
    assert len(tr["times"]) == 101
    assert tr["states"].shape[1] == 101
    assert np.isfinite(tr["states"]).all()
