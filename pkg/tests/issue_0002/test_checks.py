import numpy as np
import pytest

from shiftmpc.basis import (
    BasisFamily,
    check_family,
    decay_envelope,
    gram_condition,
    inspect_family,
    make_classic,
    make_laguerre,
)


def test_good_family_passes():
    assert list(check_family(make_laguerre(8, 0.8, 0.02))) == []
    assert list(check_family(make_classic(5))) == []


def test_non_decaying_family():
    fails = list(check_family(BasisFamily(M=np.array([[1.0]]), tau0=[1.0])))

    assert [f.code for f in fails] == ["10001"]


def test_dependent_family():
    fails = list(check_family(BasisFamily(M=0.5 * np.eye(2), tau0=np.ones(2))))

    assert [f.code for f in fails] == ["10002"]


def test_decay_envelope():
    env = decay_envelope(make_classic(3), 5)

    assert np.allclose(env, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0])

    env = decay_envelope(make_laguerre(4, 2.0, 0.1), 200)

    assert env[0] == pytest.approx(1.0)
    assert env[200] < 1e-10


def test_gram_condition():
    assert gram_condition(make_classic(6)) == pytest.approx(1.0)
    assert gram_condition(make_laguerre(8, 0.8, 0.02)) >= 1.0


def test_inspect():
    report = inspect_family(make_laguerre(8, 0.8, 0.02))

    assert report["s"] == 8
    assert report["spectral_radius"] == pytest.approx(np.exp(-0.016))
    assert report["a1_independent"] and report["a2_decaying"]
    assert report["failures"] == []
    assert len(report["decay_envelope"]) == 6

    report = inspect_family(BasisFamily(M=np.array([[1.5]]), tau0=[1.0]))

    assert not report["a2_decaying"]
    assert report["failures"][0]["code"] == "10001"
    assert "gram_condition" not in report
