import os

import numpy as np
import pytest
import ujson

from shiftmpc.admissible import (
    AdmissibleSetError,
    AffineConstraintSet,
    NmaxCapReached,
    compute_nmax,
    inner_lp,
)
from shiftmpc.basis import (
    BasisFamily,
    block_union,
    make_classic,
    make_laguerre,
    orthonormalize,
    shift_family_cascade,
)
from shiftmpc.conf import settings
from shiftmpc.nonlinear import pendulum_constraints, pendulum_family
from shiftmpc.solvers import Status, solve_lp


def _input_bound(limit=0.5):
    # one state without bounds, so only the input columns matter
    return AffineConstraintSet.from_bounds(1, 1, u_bounds={0: limit})


def test_classic_stops_at_start():
    cons = AffineConstraintSet.from_bounds(2, 1, {0: 1.0, 1: 2.0}, {0: 0.5})
    result = compute_nmax(make_classic(4), cons)

    assert result.nmax == (2 + 1) * 4
    assert result.iterations == 1
    assert np.allclose(result.certificates, -cons.b)


def test_empty_constraints():
    result = compute_nmax(make_laguerre(3, 1.0, 0.1), AffineConstraintSet.empty(2, 1))

    assert result.nmax == 9
    assert result.certificates == []


def test_unbounded_counts_as_infinite():
    result = compute_nmax(make_classic(3), _input_bound(), start=0)

    # nothing at k <= j constrains the coefficient read at j + 1 until j = s - 1
    assert result.nmax == 2
    assert result.table[0][1] == [np.inf, np.inf]
    assert result.table[1][1] == [np.inf, np.inf]
    assert result.certificates == [-0.5, -0.5]


def test_cap_reached(tmp_path):
    with pytest.raises(NmaxCapReached) as info:
        compute_nmax(make_classic(3), _input_bound(), start=0, j_cap=1)

    result = info.value.result

    assert result.nmax is None
    assert result.iterations == 2

    path = os.path.join(tmp_path, "nmax.json")
    result.write_certificate(path)

    with open(path, encoding="utf-8") as f:
        data = ujson.load(f)

    assert data["cap_reached"] is True
    assert data["nmax"] is None
    assert data["J"][0]["values"] == ["inf", "inf"]
    assert data["schema_version"] == settings.SCHEMA_VERSION


def test_certificate():
    family = make_laguerre(3, 10.0, 0.02)
    result = compute_nmax(family, _input_bound())
    data = ujson.loads(ujson.dumps(result.certificate()))

    assert data["nmax"] == result.nmax
    assert data["family_hash"] == family.hash
    assert data["constraints"]["b"] == [0.5, 0.5]
    assert data["start"] == 6
    assert len(data["J"]) == result.iterations


def test_sampled_soundness():
    family = make_laguerre(3, 10.0, 0.02)
    result = compute_nmax(family, _input_bound(0.5), start=0)
    nmax = result.nmax
    k_check = max(10 * nmax, 500)
    T = family.table(k_check + 1)
    rng = np.random.default_rng(31)

    for eta in rng.normal(size=(2000, family.s)):
        u = T @ eta
        # scaled onto the boundary of the constraints at k <= nmax
        u *= 0.5 / np.max(np.abs(u[: nmax + 1]))

        assert np.max(np.abs(u[nmax + 1 :])) <= 0.5 + 1e-6


def test_restart_above_nmax():
    family = make_laguerre(3, 10.0, 0.02)
    cons = _input_bound()
    first = compute_nmax(family, cons, start=0)
    again = compute_nmax(family, cons, start=first.nmax + 3)

    assert again.iterations == 1
    assert again.nmax == first.nmax + 3


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_sampled_soundness_full():
    family = make_laguerre(3, 0.8, 0.02)
    nmax = compute_nmax(family, _input_bound(0.5), start=0).nmax
    k_check = max(10 * nmax, 500)
    T = family.table(k_check + 1)
    rng = np.random.default_rng(37)

    for _ in range(10):
        U = rng.normal(size=(10_000, family.s)) @ T.T
        U *= 0.5 / np.max(np.abs(U[:, : nmax + 1]), axis=1, keepdims=True)

        assert np.max(np.abs(U[:, nmax + 1 :])) <= 0.5 + 1e-9


def test_free_samples_add_to_the_horizon():
    # Free leading samples absorb any value, so they only push the horizon
    # of the decaying part back by their count.
    tail = make_laguerre(3, 10.0, 0.02)
    cons = _input_bound()
    alone = compute_nmax(tail, cons, start=0).nmax

    for family in (
        block_union([make_classic(4), tail]),
        shift_family_cascade(make_classic(4), tail),
        orthonormalize(block_union([make_classic(4), tail])),
    ):
        assert compute_nmax(family, cons, start=0).nmax == 4 + alone


def test_pendulum_laguerre_block_peaks_late():
    # k^6 a^k is a trajectory of the 7 Laguerre functions and keeps growing
    # until k = 21, so their horizon (and the pendulum's, 12 samples later)
    # cannot be shorter.
    family = make_laguerre(7, 14.0, 0.02)
    k = np.arange(80.0)
    target = k**6 * np.exp(-14.0 * 0.02 * k)
    target /= np.max(target)
    T = family.table(80)
    eta = np.linalg.lstsq(T, target, rcond=None)[0]
    peak = int(np.argmax(target))

    assert np.max(np.abs(T @ eta - target)) <= 1e-6
    assert peak == 21
    assert compute_nmax(family, _input_bound(1.0), start=0).nmax >= peak


def test_coupled_dynamics_not_larger():
    family = make_laguerre(3, 10.0, 0.02)
    cons = AffineConstraintSet.from_bounds(1, 1, {0: 1.0}, {0: 0.5})
    A, B = np.array([[0.9]]), np.array([[0.1]])
    free = compute_nmax(family, cons, start=0)
    coupled = compute_nmax(family, cons, start=0, dynamics=(A, B))

    assert coupled.coupled
    assert coupled.nmax <= free.nmax


def test_inner_lp_shapes():
    family = make_classic(3)
    cons = _input_bound()
    lp = inner_lp(family, cons, 4, 0)

    # the state columns play no role and are dropped
    assert lp.n == 3
    assert lp.q == 2 * 5
    assert solve_lp(lp).status == Status.OPTIMAL


def test_bad_arguments():
    cons = _input_bound()

    with pytest.raises(AdmissibleSetError):
        compute_nmax(make_classic(3), cons, n=2)

    with pytest.raises(AdmissibleSetError):
        compute_nmax(make_classic(3), cons, start=5, j_cap=4)

    with pytest.raises(AdmissibleSetError):
        compute_nmax(BasisFamily(M=np.array([[1.0]]), tau0=[1.0]), cons)


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_pendulum_nmax():
    result = compute_nmax(pendulum_family(0.02), pendulum_constraints(), start=0)
    tail = compute_nmax(make_laguerre(7, 14.0, 0.02), _input_bound(1.0), start=0)

    assert result.nmax == 12 + tail.nmax
    assert result.nmax == 49
