import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import aligned_error, split_step

from mpk import demos
from mpk.errors import ConditioningGuard, DegenerateTime, MPKError, NonIsotropic
from mpk.flow import (
    QuadraticHamiltonian,
    anisotropic_oscillator_2d,
    dynamical_hardy_check,
    flow,
    hamiltonian_from_json,
    harmonic_oscillator,
    knutsen_comparison,
    oscillator_blocks,
    propagate,
    write_trajectory,
)
from mpk.grid import GridFunction
from mpk.hardy import DecayCertificate


def test_hamiltonian_validation():
    with pytest.raises(MPKError):
        QuadraticHamiltonian([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(MPKError):
        QuadraticHamiltonian(np.eye(3))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_flow_group_law(s, t):
    H = QuadraticHamiltonian([[1.0, 0.3], [0.3, 2.0]])
    lhs = flow(H, s + t).S.matrix
    rhs = flow(H, s).S.matrix @ flow(H, t).S.matrix
    assert np.abs(lhs - rhs).max() < 1e-11 * max(1.0, np.abs(lhs).max())


@given(st.floats(0.0, 10.0))
def test_oscillator_closed_form(t):
    H = harmonic_oscillator([1.0, 3.0], m=0.7)
    A, B, C, D = oscillator_blocks([1.0, 3.0], 0.7, t)
    assert np.abs(flow(H, t).S.matrix - np.block([[A, B], [C, D]])).max() < 1e-11


def test_conditioning_guard():
    with pytest.raises(ConditioningGuard):
        flow(harmonic_oscillator([1.0]), 2e4)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_propagate_matches_split_step(t):
    # P x.x / 2 + K xi.xi / 2 with P = m w^2, K = 1 / m
    m, w = 1.0, 1.0
    H = harmonic_oscillator([w], m)
    u0 = GridFunction.from_function(lambda x: np.exp(-np.pi * 2 * (x[..., 0] - 0.6) ** 2), 1, 256, 8.0)
    ref = split_step(u0, [[m * w**2]], [[1 / m]], t)
    assert aligned_error(propagate(u0, H, t).samples, ref.samples) < 1e-4


def test_anisotropic_degenerate_times():
    H = anisotropic_oscillator_2d()
    cert = DecayCertificate(np.diag([0, 1.0]), np.diag([0, 1.0]))
    with pytest.raises(DegenerateTime):
        dynamical_hardy_check(cert, H, np.pi)


def test_hamiltonian_json(tmp_path):
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"preset": "harmonic_oscillator", "omega": [1, 2]}))
    assert hamiltonian_from_json(p).dim == 2
    H = hamiltonian_from_json({"d": 1, "Mcal": [[1, 0], [0, 1]]})
    assert np.array_equal(H.Mcal, np.eye(2))
    with pytest.raises(MPKError):
        hamiltonian_from_json({"d": 2, "Mcal": [[1, 0], [0, 1]]})
    with pytest.raises(MPKError):
        hamiltonian_from_json({"preset": "nope"})


def test_trajectory_csv(tmp_path):
    H = anisotropic_oscillator_2d()
    # a b sin^2 t = 2 sin^2 t: 1 at pi/4 and 3 pi/4, 2 at pi/2
    cert = DecayCertificate(np.diag([0, 2.0]), np.diag([0, 1.0]))
    path = write_trajectory(tmp_path / "t.csv", H, np.linspace(0, np.pi, 5), cert)
    rows = list(csv.DictReader(open(path)))
    assert [r["status"] for r in rows] == ["DegenerateTime", "Extremal", "Vanishing", "Extremal", "DegenerateTime"]


def test_knutsen_requires_isotropy():
    H = harmonic_oscillator([1.0, 2.0])
    with pytest.raises(NonIsotropic):
        knutsen_comparison(DecayCertificate(np.diag([1.0, 2.0]), np.eye(2)), H, 0.7)


def test_knutsen_agrees_on_isotropic_data():
    rng = np.random.default_rng(0)
    H = harmonic_oscillator([1.0, 3.0])
    for _ in range(20):
        t1 = rng.uniform(0.1, 3.0)
        res, _ = demos.knutsen_demo(a=rng.uniform(0.3, 3), b=rng.uniform(0.3, 3), t1=t1)
        assert res["pass"]


def test_hbar_conversion_ground_state():
    # with hbar = 1, m = 1/2 the ground state exp(-m w x^2 / (2 hbar)) is stationary
    H = harmonic_oscillator([1.0], m=0.5, hbar=1.0)
    u0 = GridFunction.from_function(lambda x: np.exp(-0.25 * x[..., 0] ** 2), 1, 256, 16.0)
    u = propagate(u0, H, 0.9)
    assert aligned_error(u.samples, u0.samples) < 1e-6
