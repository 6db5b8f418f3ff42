import numpy as np
import pytest

from memory.errors import LibraryError, PatternError
from memory.patterns import (
    BACKGROUND,
    SIGNAL,
    BipolarPattern,
    BitPattern,
    KeyedPattern,
    PatternLibrary,
    apply_inefficiency,
    apply_noise,
    assemble_keyed,
    corrupt,
    from_bipolar,
    generate_background,
    hamming,
    key_for_kind,
    to_bipolar,
)
from utils.helper import parse_bits


def bits(text):
    return BitPattern.from_string(text)


class TestEncoding:
    def test_to_bipolar_maps_hits_to_plus_one(self):
        s = to_bipolar(bits("0100"))
        np.testing.assert_array_equal(s.spins, [-1, 1, -1, -1])

    def test_from_bipolar_inverts(self):
        p = bits("101100111000")
        assert from_bipolar(to_bipolar(p)) == p

    def test_rejects_non_binary(self):
        with pytest.raises(PatternError):
            BitPattern(np.array([0, 2, 1]))
        with pytest.raises(PatternError):
            BipolarPattern(np.array([1, 0, -1]))

    def test_parse_bits_ignores_separators(self):
        assert parse_bits("0100 1000_0010") == bits("010010000010")
        assert parse_bits("0,1,1") == bits("011")

    def test_patterns_are_immutable(self):
        p = bits("0101")
        with pytest.raises(ValueError):
            p.bits[0] = 1


class TestHamming:
    def test_counts_differences(self):
        assert hamming(bits("0110"), bits("0011")) == 2
        assert hamming(bits("0110"), bits("0110")) == 0

    def test_length_mismatch(self):
        with pytest.raises(PatternError):
            hamming(bits("01"), bits("011"))


class TestCorruption:
    def test_noise_never_clears_hits(self):
        rng = np.random.default_rng(1)
        p = bits("100000010000000100000000")
        for _ in range(50):
            noisy = apply_noise(p, 0.3, rng)
            assert np.all(noisy.bits >= p.bits)

    def test_inefficiency_never_sets_bits(self):
        rng = np.random.default_rng(2)
        p = bits("100000010000000100000000")
        for _ in range(50):
            dropped = apply_inefficiency(p, 0.5, rng)
            assert np.all(dropped.bits <= p.bits)

    def test_identity_at_perfect_detector(self):
        rng = np.random.default_rng(3)
        p = bits("010000000100000001000000")
        assert apply_noise(p, 0.0, rng) == p
        assert apply_inefficiency(p, 1.0, rng) == p
        assert corrupt(p, 1.0, 0.0, rng) == p

    def test_full_noise_and_zero_efficiency(self):
        rng = np.random.default_rng(4)
        p = bits("0100")
        assert apply_noise(p, 1.0, rng) == bits("1111")
        assert apply_inefficiency(p, 0.0, rng) == bits("0000")

    def test_noise_rate_matches_gamma(self):
        rng = np.random.default_rng(5)
        p = BitPattern.zeros(1000)
        fired = sum(apply_noise(p, 0.08, rng).popcount for _ in range(20))
        assert abs(fired / 20000 - 0.08) < 0.01

    @pytest.mark.slow
    def test_mean_hits_lost_at_92_percent_efficiency(self):
        rng = np.random.default_rng(11)
        p = bits("100000000100000000100000")
        lost = [3 - apply_inefficiency(p, 0.92, rng).popcount for _ in range(100_000)]
        # 3 * 0.08, standard error about 0.0015
        assert np.mean(lost) == pytest.approx(0.24, abs=0.006)

    def test_probability_range_checked(self):
        rng = np.random.default_rng(6)
        with pytest.raises(PatternError):
            apply_noise(bits("01"), 1.5, rng)
        with pytest.raises(PatternError):
            apply_inefficiency(bits("01"), -0.1, rng)

    def test_same_seed_same_result(self):
        p = bits("010000000100000001000000")
        a = corrupt(p, 0.9, 0.1, np.random.default_rng(7))
        b = corrupt(p, 0.9, 0.1, np.random.default_rng(7))
        assert a == b


class TestKeys:
    def test_key_convention(self):
        assert key_for_kind(SIGNAL, 1) == bits("1")
        assert key_for_kind(BACKGROUND, 2) == bits("00")
        assert key_for_kind(SIGNAL, 0) is None

    def test_keyed_pattern_places_key_first(self):
        kp = assemble_keyed([1], bits("0100"), SIGNAL)
        assert kp.K == 1 and kp.V == 4 and kp.N == 5
        assert kp.bits == bits("10100")

    def test_empty_key_gives_unkeyed_pattern(self):
        kp = assemble_keyed([], bits("0100"))
        assert kp.key is None
        assert kp.bits == bits("0100")


class TestLibrary:
    def _library(self):
        return PatternLibrary((
            KeyedPattern(bits("100010001000")),
            KeyedPattern(bits("010001000100")),
        ))

    def test_densities(self):
        lib = self._library().with_backgrounds([bits("001000100010")])
        assert lib.p_s == 2 and lib.p_b == 1
        assert lib.alpha_s == pytest.approx(2 / 12)
        assert lib.alpha_b == pytest.approx(1 / 12)

    def test_duplicate_values_rejected(self):
        with pytest.raises(LibraryError):
            PatternLibrary((KeyedPattern(bits("0110")), KeyedPattern(bits("0110"), kind=BACKGROUND)))

    def test_empty_library_rejected(self):
        with pytest.raises(LibraryError):
            PatternLibrary(())

    def test_mixed_shapes_rejected(self):
        with pytest.raises(LibraryError):
            PatternLibrary((KeyedPattern(bits("0110")), KeyedPattern(bits("01100"))))

    def test_keyed_applies_kind_convention(self):
        lib = self._library().with_backgrounds([bits("001000100010")]).keyed(1)
        assert lib.K == 1
        assert [p.key.to_string() for p in lib.patterns] == ["1", "1", "0"]
        assert lib.keyed(0).K == 0

    def test_bipolar_matrix_rows(self):
        lib = self._library().keyed(1)
        xi = lib.bipolar_matrix()
        assert xi.shape == (2, 13)
        np.testing.assert_array_equal(xi[:, 0], [1, 1])

    def test_signal_only_drops_backgrounds(self):
        lib = self._library().with_backgrounds([bits("001000100010")])
        assert lib.signal_only().p_b == 0


class TestBackground:
    def test_background_not_in_library(self):
        rng = np.random.default_rng(8)
        lib = PatternLibrary((KeyedPattern(bits("000")), KeyedPattern(bits("001"))))
        seen = {generate_background(3, 0.5, lib, rng).to_string() for _ in range(100)}
        assert seen.isdisjoint({"000", "001"})

    def test_exhausted_space_raises(self):
        rng = np.random.default_rng(9)
        lib = PatternLibrary((KeyedPattern(bits("0")), KeyedPattern(bits("1"))))
        with pytest.raises(LibraryError):
            generate_background(1, 0.5, lib, rng, max_tries=50)

    def test_excluded_patterns_skipped(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            assert generate_background(2, 0.5, None, rng, exclude=[bits("00"), bits("01"), bits("10")]) == bits("11")

    @pytest.mark.slow
    def test_mean_background_popcount(self):
        rng = np.random.default_rng(12)
        counts = [generate_background(24, 0.15, None, rng).popcount for _ in range(100_000)]
        # 24 * 0.15, standard error about 0.0055
        assert np.mean(counts) == pytest.approx(3.6, abs=0.025)
