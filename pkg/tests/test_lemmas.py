import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpaltls.errors import DimensionError
from cpaltls.lemmas import (
    LEMMA_IDS,
    LemmaReport,
    lemma_oracle,
    random_instance,
    run_lemma_suite,
    write_reports_csv,
)


def test_a1_identical():
    a = np.eye(4)[:, :3]
    rep = lemma_oracle("A1-innerprod-i", a, a)
    assert rep.hypotheses_hold and rep.lhs == 0.0 and rep.bound == 0.0
    assert not rep.violated


def test_a3c_dense_inverse_oracle():
    n, delta = 5, 0.01
    a = np.eye(n) + delta * (np.ones((n, n)) - np.eye(n))
    rep = lemma_oracle("A3c-corollary", a, eps=delta)
    assert rep.hypotheses_hold
    assert rep.bound == pytest.approx(delta / (1 - (n - 1) * delta))
    assert rep.bound == pytest.approx(0.010417, abs=1e-6)
    assert rep.lhs == pytest.approx(np.max(np.abs(np.linalg.inv(a) - np.eye(n))), rel=1e-14)
    assert rep.margin >= 0


def test_a5_identity_mixing():
    b, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 4)))
    # power-of-two weights keep the rescaling exact
    weights = np.array([1.0, -2.0, 4.0, 0.5])
    rep = lemma_oracle("A5-normalization-o", b, np.diag(weights), weights)
    assert rep.hypotheses_hold and rep.lhs == 0.0 and rep.bound == 0.0
    weights = np.array([1.0, -3.0, 7.0, 0.1])
    rep = lemma_oracle("A5-normalization-o", b, np.diag(weights), weights)
    assert rep.lhs <= 1e-15 and rep.bound == 0.0 and not rep.violated


def test_a3_reports_all_parts():
    rng = np.random.default_rng(1)
    a, b = random_instance("A3-inverse", rng, size=4)
    rep = lemma_oracle("A3-inverse", a, b)
    assert [p[0] for p in rep.parts] == ["a1", "a2", "b", "c"]
    assert all(lhs <= bound + 1e-12 for _, lhs, bound in rep.parts)


def test_failed_hypotheses_not_asserted():
    a = np.eye(3) + 0.9 * (np.ones((3, 3)) - np.eye(3))
    rep = lemma_oracle("A3c-corollary", a)
    assert not rep.hypotheses_hold and not rep.violated


def test_a1_hypothesis_sign():
    a = np.eye(3)
    rep = lemma_oracle("A1-innerprod-i", a, -a)
    assert not rep.hypotheses_hold


def test_a2_needs_orthonormal_basis():
    b = np.array([[1.0, 1.0], [0.0, 1.0]]) / np.array([1.0, np.sqrt(2)])
    assert not lemma_oracle("A2-innerprod-o", b, b).hypotheses_hold


def test_violation_flag():
    assert LemmaReport("x", True, 1.0, 0.5).violated
    assert not LemmaReport("x", True, 0.5 + 1e-12, 0.5).violated
    assert not LemmaReport("x", False, 1.0, 0.5).violated


def test_shape_errors():
    with pytest.raises(DimensionError):
        lemma_oracle("A1-innerprod-i", np.eye(3), np.eye(2))
    with pytest.raises(DimensionError):
        lemma_oracle("A3-inverse", np.eye(3), np.eye(2))
    with pytest.raises(ValueError):
        lemma_oracle("A9-bogus", np.eye(2))


@pytest.mark.parametrize("lemma_id", LEMMA_IDS)
@given(seed=st.integers(0, 2**63 - 1), size=st.integers(2, 10))
def test_generated_instances_satisfy_hypotheses(lemma_id, seed, size):
    inputs = random_instance(lemma_id, np.random.default_rng(seed), size)
    rep = lemma_oracle(lemma_id, *inputs)
    assert rep.hypotheses_hold
    assert not rep.violated


def test_tight_innerprod_o():
    # one column tilted towards a single other basis vector attains the bound
    b = np.eye(3)
    a = b.copy()
    a[:, 0] = [np.cos(0.3), np.sin(0.3), 0.0]
    rep = lemma_oracle("A2-innerprod-o", a, b)
    assert rep.lhs == pytest.approx(rep.bound, rel=1e-14)


def test_suite_deterministic_csv():
    def render():
        buf = io.StringIO()
        write_reports_csv(run_lemma_suite(1, seed=7), buf)
        return buf.getvalue()

    text = render()
    assert text == render()
    lines = text.strip().splitlines()
    assert lines[0] == "lemma_id,seed,hypotheses_hold,lhs,bound,margin"
    assert len(lines) == 9


def test_suite_spans_sizes():
    reports = run_lemma_suite(40, seed=3, lemma_ids=("A3c-corollary",))
    assert all(not r.violated for r in reports)
    assert len({r.seed for r in reports}) == 40
