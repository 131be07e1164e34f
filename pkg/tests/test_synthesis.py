import numpy as np
import pytest

from cpaltls.diagnostics import coherence, epsilon_metric
from cpaltls.errors import DimensionError
from cpaltls.model import KruskalModel
from cpaltls.synthesis import (
    GeneratorSpec,
    error_drop_test,
    gen_cyclic,
    gen_identity_counterexample,
    gen_ideco,
    gen_odeco,
    random_init,
    restart_until_converged,
    substream,
)
from cpaltls.altls import AltLSState, StoppingRule, step_parallel


def all_pairs_coherence(a):
    best = 0.0
    for i in range(a.shape[1]):
        for j in range(a.shape[1]):
            if i != j:
                best = max(best, abs(float(a[:, i] @ a[:, j])))
    return best


class TestSpec:
    def test_extents_replicated(self):
        assert GeneratorSpec(order=4).extents == (20, 20, 20, 20)

    def test_validation(self):
        with pytest.raises(ValueError):
            GeneratorSpec(kind="tucker")
        with pytest.raises(DimensionError):
            GeneratorSpec(order=3, extents=(4, 4))
        with pytest.raises(ValueError):
            GeneratorSpec(incoherence_scale=-1.0)


class TestOdeco:
    def test_default_setup(self):
        inst = gen_odeco(GeneratorSpec("odeco", 3, (20,), 10, seed=0))
        assert inst.metadata["mu"] <= 1e-12
        for f in inst.truth.factors:
            np.testing.assert_allclose(f.T @ f, np.eye(10), atol=1e-12)
        eps0 = epsilon_metric(inst.init, inst.truth)
        assert 1e-3 < eps0 < 1e-1
        assert inst.init.is_normalized()

    def test_zero_perturbation(self):
        inst = gen_odeco(GeneratorSpec("odeco", 3, (8,), 4, init_perturbation_scale=0.0))
        assert epsilon_metric(inst.init, inst.truth) == 0.0

    def test_rank_too_large(self):
        with pytest.raises(DimensionError):
            gen_odeco(GeneratorSpec("odeco", 3, (5, 6, 4), 5))

    def test_deterministic(self):
        spec = GeneratorSpec("odeco", 3, (6,), 3, seed=11)
        a, b = gen_odeco(spec), gen_odeco(spec)
        np.testing.assert_array_equal(a.tensor, b.tensor)
        for fa, fb in zip(a.init.factors, b.init.factors):
            np.testing.assert_array_equal(fa, fb)

    def test_substreams_independent(self):
        # changing the init scale must not move the truth
        a = gen_odeco(GeneratorSpec("odeco", 3, (6,), 3, init_perturbation_scale=0.1, seed=2))
        b = gen_odeco(GeneratorSpec("odeco", 3, (6,), 3, init_perturbation_scale=0.2, seed=2))
        np.testing.assert_array_equal(a.tensor, b.tensor)

    def test_wrong_kind(self):
        with pytest.raises(ValueError):
            gen_odeco(GeneratorSpec("ideco"))


class TestIdeco:
    def test_coherence_small_and_matches_oracle(self):
        for seed in range(5):
            inst = gen_ideco(GeneratorSpec("ideco", 3, (20,), 10, 1e-2, seed=seed))
            oracle = max(all_pairs_coherence(f) for f in inst.truth.factors)
            assert 0 < inst.metadata["mu"] <= oracle + 1e-14
            assert np.isclose(inst.metadata["mu"], oracle, rtol=1e-12)
            assert 1e-4 <= inst.metadata["mu"] <= 1e-1

    def test_zero_scale_is_odeco(self):
        a = gen_ideco(GeneratorSpec("ideco", 3, (8,), 4, 0.0, seed=5))
        b = gen_odeco(GeneratorSpec("odeco", 3, (8,), 4, 0.0, seed=5))
        np.testing.assert_array_equal(a.tensor, b.tensor)

    def test_truth_normalized(self):
        inst = gen_ideco(GeneratorSpec("ideco", 4, (10,), 5, 1e-2))
        assert inst.truth.is_normalized()


class TestCyclic:
    def test_structure(self):
        x, truth = gen_cyclic(0)
        a = truth.factors[0]
        expected = (np.einsum("i,j,k->ijk", a[:, 0], a[:, 1], a[:, 2])
                    + np.einsum("i,j,k->ijk", a[:, 1], a[:, 2], a[:, 0])
                    + np.einsum("i,j,k->ijk", a[:, 2], a[:, 0], a[:, 1]))
        np.testing.assert_allclose(x, expected, rtol=1e-14)
        assert x.shape == (10, 10, 10)
        assert x.min() >= 0 and x.max() < 3

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_cyclic(4)[0], gen_cyclic(4)[0])


class TestCounterexample:
    def test_identity(self):
        x, init = gen_identity_counterexample(4, seed=1)
        np.testing.assert_array_equal(x, np.eye(4))
        assert init.is_normalized()
        assert all(np.linalg.matrix_rank(f) == 4 for f in init.factors)

    def test_needs_rank_two(self):
        with pytest.raises(ValueError):
            gen_identity_counterexample(1)

    def test_exact_identity_is_fixed_point(self):
        x = np.eye(3)
        m = KruskalModel(np.ones(3), (np.eye(3), np.eye(3)))
        out, _ = step_parallel(x, m, AltLSState.from_model(m))
        for f in out.factors:
            np.testing.assert_allclose(np.abs(f), np.eye(3), atol=1e-15)

    @pytest.mark.parametrize("rank", [2, 3, 5])
    def test_two_periodic(self, rank):
        x, m = gen_identity_counterexample(rank, seed=rank)
        state = AltLSState.from_model(m)
        history = [m]
        for _ in range(10):
            m, state = step_parallel(x, m, state)
            history.append(m)
        for k in range(2, 9):
            for a, b in zip(history[k].factors, history[k + 2].factors):
                assert np.max(np.abs(a - b)) <= 1e-10


class TestRestarts:
    def test_exact_init_uses_one_restart(self):
        inst = gen_odeco(GeneratorSpec("odeco", 3, (6,), 3, init_perturbation_scale=0.0))
        res = restart_until_converged(inst.tensor, lambda rng: inst.init)
        assert res.converged and res.restarts_used == 1

    def test_zero_restarts(self):
        res = restart_until_converged(np.ones((2, 2)), lambda rng: random_init((2, 2), 1, rng),
                                      max_restarts=0)
        assert not res.converged and res.restarts_used == 0 and res.model is None

    def test_positive_success_probability(self):
        successes = 0
        for trial in range(200):
            inst = gen_odeco(GeneratorSpec("odeco", 3, (2,), 2, seed=trial))
            res = restart_until_converged(inst.tensor, lambda rng: random_init((2, 2, 2), 2, rng),
                                          max_restarts=1, seed=trial)
            successes += res.converged
        assert successes > 0

    def test_exhaustion_reports(self):
        never = lambda trace: False  # noqa: E731
        res = restart_until_converged(np.eye(2), lambda rng: random_init((2, 2), 2, rng),
                                      radius_test=never, max_restarts=3)
        assert not res.converged and res.restarts_used == 3

    def test_error_drop_test(self):
        from cpaltls.diagnostics import ConvergenceTrace, TraceRecord
        t = ConvergenceTrace()
        for k, e in enumerate([1.0, 0.5, 0.05]):
            t.append(TraceRecord(k, e))
        assert error_drop_test()(t)
        assert not error_drop_test(factor=100)(t)


def test_substream_distinct():
    a = substream(0, 1, 0).standard_normal(3)
    b = substream(0, 1, 1).standard_normal(3)
    assert not np.array_equal(a, b)
