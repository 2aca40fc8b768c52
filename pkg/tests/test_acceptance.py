"""Acceptance gate: every verification check must pass at its stated tolerance.

The checks share a Lab cache via a session fixture so the full gate runs in
well under a minute.  Each test asserts the verdict of one check and prints
the observed/predicted pair on failure.
"""

import pytest

from szegolab import acceptance


@pytest.fixture(scope="session")
def lab():
    return acceptance.Lab()


def run(check, lab):
    verdict = check(lab)
    assert verdict["pass"], verdict
    return verdict


def test_circle_spectrum_oracle(lab):
    v = run(acceptance.check_circle_spectrum, lab)
    assert v["observed"] <= 1e-6


def test_trace_identity(lab):
    v = run(acceptance.check_trace_identity, lab)
    assert set(v["detail"]) == {"circle", "torus", "sphere3"}


def test_pair_trace(lab):
    v = run(acceptance.check_pair_trace, lab)
    assert v["detail"]["relative_gap"] <= 1e-6


def test_moment_asymptotics(lab):
    v = run(acceptance.check_moment_asymptotics, lab)
    for slope in v["detail"].values():
        assert abs(slope + 1.0) <= 0.25


def test_szego_entropy_function(lab):
    run(acceptance.check_szego_entropy_function, lab)


def test_weyl_counts(lab):
    run(acceptance.check_weyl_counts, lab)


def test_schatten_norms(lab):
    run(acceptance.check_schatten, lab)


def test_entropy_limit(lab):
    run(acceptance.check_entropy, lab)


def test_norm_scaling(lab):
    run(acceptance.check_norm_scaling, lab)


def test_hessian_oracle(lab):
    v = run(acceptance.check_hessian_oracle, lab)
    assert v["observed"] <= 1e-8


def test_mellin_identity(lab):
    v = run(acceptance.check_mellin_identity, lab)
    assert v["observed"] <= 1e-8


def test_bohr_sommerfeld_states(lab):
    run(acceptance.check_bohr_sommerfeld, lab)


def test_parabola_moments(lab):
    run(acceptance.check_parabola_moments, lab)


def test_run_all_shape(lab):
    verdicts = acceptance.run_all(lab)
    assert len(verdicts) == len(acceptance.CHECKS) == 13
    for v in verdicts:
        assert set(v) >= {"check_id", "observed", "predicted",
                          "tolerance", "pass"}
        assert v["pass"] is True
