import logging

import numpy as np
import pytest

from memory.errors import LearningError
from memory.ising import build_problem, build_qamm, energy
from memory.learning import (
    CovarianceMatrix,
    QAMM,
    QCAM,
    WeightMatrix,
    bipartite_projection_weights,
    coupling_summary,
    covariance,
    projection_weights,
    pseudo_inverse,
    rank_deficiency,
    rescale,
    train_weights,
)
from memory.patterns import BipolarPattern, BitPattern, KeyedPattern, PatternLibrary, to_bipolar
from memory.solvers import solve_exact


def random_library(V=16, p=3, seed=0):
    rng = np.random.default_rng(seed)
    values = set()
    while len(values) < p:
        values.add(BitPattern((rng.random(V) < 0.3).astype(np.uint8)))
    return PatternLibrary(tuple(KeyedPattern(v) for v in sorted(values, key=lambda b: b.to_string())))


def invertible_library(V, p, seed):
    for attempt in range(50):
        library = random_library(V, p, seed * 50 + attempt)
        if rank_deficiency(covariance(library.bipolar_patterns())) == 0:
            return library
    raise AssertionError(f"no invertible library for V={V}, p={p}")


class TestProjectionRule:
    def test_encoded_patterns_sit_at_minus_n(self):
        library = random_library()
        W = train_weights(library, QAMM)
        zero_bias = WeightMatrix(W.entries)
        for pattern in library.bipolar_patterns():
            prob = build_qamm(zero_bias, pattern, 0.0)
            assert energy(prob, pattern) == pytest.approx(-library.N, abs=1e-9)

    def test_probe_bias_adds_theta_n(self):
        library = random_library(seed=1)
        W = train_weights(library, QAMM)
        pattern = library.bipolar_patterns()[0]
        prob = build_problem(W, pattern, 0.5)
        assert energy(prob, pattern) == pytest.approx(-library.N - 0.5 * library.N, abs=1e-9)

    def test_weights_are_a_symmetric_projector(self):
        W = projection_weights(random_library(seed=2).bipolar_patterns()).entries
        np.testing.assert_allclose(W, W.T, atol=1e-12)
        np.testing.assert_allclose(W @ W, W, atol=1e-9)
        assert np.trace(W) == pytest.approx(3.0)

    def test_covariance_of_orthogonal_patterns(self):
        xi = np.array([[1, 1, 1, 1], [1, -1, 1, -1]], dtype=float)
        np.testing.assert_allclose(covariance(xi).entries, np.eye(2))

    def test_duplicate_patterns_are_rank_deficient(self, caplog):
        xi = np.array([[1, -1, 1, -1, 1, 1], [1, -1, 1, -1, 1, 1], [1, 1, -1, -1, 1, -1]], dtype=float)
        assert rank_deficiency(covariance(xi)) == 1
        with caplog.at_level(logging.WARNING, logger="memory.learning"):
            W = projection_weights(xi).entries
        assert "rank deficient" in caplog.text
        s = xi[0]
        assert -s @ W @ s == pytest.approx(-6.0)

    def test_unknown_model(self):
        with pytest.raises(LearningError):
            train_weights(random_library(), "hopfield")

    def test_encoded_energy_identity_on_random_libraries(self):
        rng = np.random.default_rng(100)
        for seed in range(50):
            V = int(rng.integers(12, 25))
            p = int(rng.integers(1, V // 2 + 1))
            library = invertible_library(V, p, seed)
            W = WeightMatrix(train_weights(library, QAMM).entries)
            for pattern in library.bipolar_patterns():
                assert energy(build_qamm(W, pattern, 0.0), pattern) == pytest.approx(-V, rel=1e-9)

    def test_pseudo_inverse_of_singular_matrix(self, caplog):
        with caplog.at_level(logging.WARNING, logger="memory.learning"):
            inverse = pseudo_inverse(CovarianceMatrix(np.ones((2, 2))))
        np.testing.assert_allclose(inverse, np.full((2, 2), 0.25), atol=1e-12)
        assert "rank deficient" in caplog.text


class TestCapacity:
    @pytest.mark.slow
    def test_encoded_patterns_minimise_the_unbiased_form(self):
        rng = np.random.default_rng(200)
        for seed in range(100):
            N = int(rng.integers(8, 17))
            p = int(rng.integers(1, N // 2 + 1))
            library = invertible_library(N, p, 1000 + seed)
            patterns = library.bipolar_patterns()
            unbiased = build_qamm(WeightMatrix(train_weights(library, QAMM).entries), patterns[0], 0.0)
            ground = solve_exact(unbiased)
            minimum = ground.lowest().energy
            states = {tuple(s.state.spins.tolist()) for s in ground.samples}
            for pattern in patterns:
                assert energy(unbiased, pattern) <= minimum + 1e-9 * N
                assert tuple(pattern.spins.tolist()) in states

    def test_dominant_bias_pins_the_ground_state_to_the_input(self):
        # theta above 2 * max_i sum_j |W_ij| outweighs every coupling change
        rng = np.random.default_rng(300)
        for seed in range(5):
            W = train_weights(random_library(V=12, p=4, seed=seed), QAMM)
            bound = 2 * np.abs(W.entries).sum(axis=1).max()
            target = BipolarPattern((2 * rng.integers(0, 2, 12) - 1).astype(np.int8))
            result = solve_exact(build_qamm(W, target, 1.01 * bound))
            assert result.reads == 1
            assert result.lowest().state == target


class TestBipartiteRule:
    def test_key_key_and_value_value_blocks_are_zero(self):
        library = random_library(V=12, p=2, seed=3).with_backgrounds(
            [BitPattern.from_string("000000000111")]
        ).keyed(2)
        W = train_weights(library, QCAM)
        K, V = library.K, library.V
        assert W.bipartite and W.key_size == K
        np.testing.assert_array_equal(W.entries[:K, :K], 0.0)
        np.testing.assert_array_equal(W.entries[K:, K:], 0.0)
        assert np.count_nonzero(W.entries == 0.0) >= K * K + V * V

    def test_needs_a_key(self):
        with pytest.raises(LearningError):
            bipartite_projection_weights(random_library().patterns)

    def test_coupling_graph_is_bipartite(self):
        library = random_library(V=10, p=2, seed=4).keyed(1)
        summary = coupling_summary(train_weights(library, QCAM))
        assert summary["is_bipartite_graph"]
        assert summary["key_size"] == 1
        assert summary["bipartite_rule"]


class TestRescale:
    def test_max_weight_becomes_three_quarters(self):
        W = train_weights(random_library(seed=5), QAMM)
        scaled, theta = rescale(W, 0.74)
        factor = 0.75 / W.max_weight
        assert scaled.max_weight == pytest.approx(0.75)
        assert theta == pytest.approx(0.74 * factor)
        np.testing.assert_allclose(scaled.entries, W.entries * factor)

    def test_non_positive_maximum_rejected(self):
        with pytest.raises(LearningError):
            rescale(WeightMatrix(-np.eye(3)), 0.74)


class TestWeightMatrix:
    def test_must_be_square(self):
        with pytest.raises(LearningError):
            WeightMatrix(np.zeros((2, 3)))

    def test_frame_labels_keys_first(self):
        W = WeightMatrix(np.eye(3), key_size=1)
        assert list(W.to_frame().columns) == ["k0", "v0", "v1"]

    def test_csv_dump(self, tmp_path):
        W = train_weights(random_library(V=8, p=2, seed=6), QAMM)
        path = tmp_path / "weights.csv"
        W.to_csv(str(path))
        lines = path.read_text().splitlines()
        assert len(lines) == W.N + 1
        assert lines[0].split(",")[1:] == [f"v{i}" for i in range(W.N)]


def test_probe_equal_to_pattern_matches_bipolar_helper():
    library = random_library(V=8, p=2, seed=7)
    value = library.patterns[1].value
    assert library.bipolar_patterns()[1] == to_bipolar(value)
