import numpy as np
import pytest

from memory.classifiers import (
    ENERGY,
    KEY,
    ConfusionCounts,
    EnergyCalibration,
    KeyCalibration,
    RocCurve,
    RocPoint,
    auc,
    calibrate,
    check_encoding,
    classify,
    confusion,
    pooled_roc,
    probe_statistic,
    roc_sweep,
)
from memory.errors import ClassificationError
from memory.ising import Sample, SolveResult
from memory.learning import QAMM, QCAM, rescale, train_weights
from memory.patterns import BACKGROUND, SIGNAL, BipolarPattern, BitPattern, KeyedPattern, PatternLibrary
from memory.solvers import SolverConfig

EXACT = SolverConfig(name="exact")


def signal_library(seed=0, V=12, p=2):
    rng = np.random.default_rng(seed)
    values = []
    while len(values) < p:
        v = BitPattern((rng.random(V) < 0.3).astype(np.uint8))
        if v not in values:
            values.append(v)
    return PatternLibrary(tuple(KeyedPattern(v) for v in values))


class TestClassify:
    cal = EnergyCalibration(mean=-40.0, sigma=2.0)

    def test_inside_range_is_signal(self):
        assert classify(-44.0, self.cal, 3.0) == SIGNAL
        assert classify(-34.0, self.cal, 3.0) == SIGNAL

    def test_outside_range_is_background(self):
        assert classify(-47.0, self.cal, 3.0) == BACKGROUND
        assert classify(-33.0, self.cal, 3.0) == BACKGROUND

    def test_zero_width_keeps_exact_matches(self):
        cal = EnergyCalibration(mean=-24.0, sigma=0.0)
        assert classify(-24.0, cal, 0.0) == SIGNAL
        assert classify(-24.0 + 1e-12, cal, 5.0) == SIGNAL
        assert classify(-23.9, cal, 10.0) == BACKGROUND

    def test_negative_beta_rejected(self):
        with pytest.raises(ClassificationError):
            classify(0.0, self.cal, -1.0)

    def test_key_mean_must_be_bipolar(self):
        KeyCalibration(mean=1.0, sigma=0.0)
        with pytest.raises(ClassificationError):
            KeyCalibration(mean=1.5, sigma=0.1)


class TestConfusion:
    def test_rates_from_counts(self):
        counts = ConfusionCounts(tp=3, fp=2, tn=4, fn=1)
        assert counts.tpr == pytest.approx(0.75)
        assert counts.fpr == pytest.approx(1 / 3)
        assert counts.total == 10

    def test_counts_from_labels(self):
        labels = [SIGNAL, SIGNAL, BACKGROUND, BACKGROUND, SIGNAL]
        truths = [SIGNAL, BACKGROUND, BACKGROUND, SIGNAL, SIGNAL]
        assert confusion(labels, truths) == ConfusionCounts(tp=2, fp=1, tn=1, fn=1)

    def test_all_correct(self):
        counts = confusion([SIGNAL, BACKGROUND], [SIGNAL, BACKGROUND])
        assert counts.tpr == 1.0 and counts.fpr == 0.0

    def test_empty_classes_give_zero(self):
        counts = confusion([SIGNAL], [SIGNAL])
        assert counts.fpr == 0.0
        assert ConfusionCounts().tpr == 0.0

    def test_counts_add(self):
        assert ConfusionCounts(1, 2, 3, 4) + ConfusionCounts(1, 1, 1, 1) == ConfusionCounts(2, 3, 4, 5)

    def test_length_mismatch(self):
        with pytest.raises(ClassificationError):
            confusion([SIGNAL], [SIGNAL, BACKGROUND])


class TestAuc:
    def test_single_diagonal_point(self):
        assert auc([RocPoint(1.0, 0.5, 0.5)]) == pytest.approx(0.5)
        assert auc([RocPoint(1.0, 0.2, 0.2)]) == pytest.approx(0.5)

    def test_perfect_separation(self):
        stats = [0.0] * 5 + [100.0] * 5
        truths = [SIGNAL] * 5 + [BACKGROUND] * 5
        curve = roc_sweep(stats, truths, EnergyCalibration(mean=0.0, sigma=1.0))
        assert curve.auc == pytest.approx(1.0)

    def test_tied_fpr_is_averaged(self):
        points = [RocPoint(0.0, 0.2, 0.5), RocPoint(1.0, 0.6, 0.5)]
        # merged point (0.5, 0.4): 0.5 * 0.4 / 2 + 0.5 * (0.4 + 1) / 2
        assert auc(points) == pytest.approx(0.45)

    def test_no_points_gives_chance(self):
        assert auc([]) == pytest.approx(0.5)

    def test_identical_distributions_near_chance(self):
        rng = np.random.default_rng(0)
        stats = rng.normal(size=10_000)
        truths = [SIGNAL if t else BACKGROUND for t in rng.random(10_000) < 0.5]
        curve = roc_sweep(stats, truths, EnergyCalibration(mean=0.0, sigma=1.0), np.linspace(0, 4, 21))
        assert curve.auc == pytest.approx(0.5, abs=0.05)

    def test_rates_grow_with_beta(self):
        rng = np.random.default_rng(1)
        stats = np.concatenate([rng.normal(0, 1, 50), rng.normal(3, 1, 50)])
        truths = [SIGNAL] * 50 + [BACKGROUND] * 50
        frame = roc_sweep(stats, truths, EnergyCalibration(mean=0.0, sigma=1.0)).to_frame()
        assert frame["tpr"].is_monotonic_increasing
        assert frame["fpr"].is_monotonic_increasing
        assert list(frame.columns) == ["beta", "tpr", "fpr"]

    def test_betas_must_increase(self):
        with pytest.raises(ClassificationError):
            RocCurve((RocPoint(1.0, 0.5, 0.5), RocPoint(1.0, 0.6, 0.6)), 0.5)


class TestPooledRoc:
    def test_pools_counts_across_sets(self):
        cal_a = EnergyCalibration(mean=0.0, sigma=1.0)
        cal_b = EnergyCalibration(mean=10.0, sigma=1.0)
        groups = [
            ([0.5, 5.0], [SIGNAL, BACKGROUND], cal_a),
            ([10.5, 11.5], [SIGNAL, BACKGROUND], cal_b),
        ]
        point = pooled_roc(groups, [1.0]).points[0]
        # set a: tp, tn; set b: tp, tn
        assert point.tpr == 1.0 and point.fpr == 0.0
        point = pooled_roc(groups, [2.0]).points[0]
        assert point.tpr == 1.0 and point.fpr == 0.5

    def test_empty_grid_rejected(self):
        with pytest.raises(ClassificationError):
            pooled_roc([([0.0], [SIGNAL], EnergyCalibration(0.0, 1.0))], [])


class TestStatistics:
    def _result(self):
        states = [BipolarPattern(np.array(s, dtype=np.int8)) for s in ([1, -1, 1], [-1, -1, 1], [1, 1, -1])]
        return SolveResult(tuple(Sample(s, e) for s, e in zip(states, (-3.0, -2.0, -1.0))))

    def test_energy_statistic_is_mean(self):
        assert probe_statistic(self._result(), ENERGY) == pytest.approx(-2.0)

    def test_key_statistic_is_mean_bipolar_bit(self):
        assert probe_statistic(self._result(), KEY, 0) == pytest.approx(1 / 3)
        assert probe_statistic(self._result(), KEY, 1) == pytest.approx(-1 / 3)

    def test_unknown_mode(self):
        with pytest.raises(ClassificationError):
            probe_statistic(self._result(), "distance")


class TestCalibrate:
    def test_energy_calibration_on_encoded_signals(self):
        library = signal_library()
        W, theta = rescale(train_weights(library, QAMM), 0.74)
        cal = calibrate(library, W, theta, EXACT, ENERGY)
        expected = -library.N * (W.max_weight / train_weights(library, QAMM).max_weight) - theta * library.N
        assert cal.probes == 2
        assert cal.mean == pytest.approx(expected)
        assert cal.sigma == pytest.approx(0.0, abs=1e-9)

    def test_key_calibration_recalls_signal_key(self):
        base = signal_library(seed=1)
        library = base.with_backgrounds([BitPattern.from_string("000000111000")]).keyed(1)
        W, theta = rescale(train_weights(library, QCAM), 0.74)
        seen = []
        cal = calibrate(library, W, theta, EXACT, KEY, on_result=lambda i, r: seen.append(i))
        assert seen == library.indices(SIGNAL)
        assert cal.mode == KEY
        assert cal.mean == pytest.approx(1.0)

    def test_energy_mode_rejects_backgrounds(self):
        library = signal_library().with_backgrounds([BitPattern.from_string("000000111000")])
        with pytest.raises(ClassificationError):
            check_encoding(library, ENERGY)

    def test_key_mode_needs_keys_and_backgrounds(self):
        with pytest.raises(ClassificationError):
            check_encoding(signal_library().keyed(1), KEY)
        library = signal_library().with_backgrounds([BitPattern.from_string("000000111000")])
        with pytest.raises(ClassificationError):
            check_encoding(library, KEY)

    def test_no_signals(self):
        library = PatternLibrary((KeyedPattern(BitPattern.from_string("0110"), kind=BACKGROUND),))
        with pytest.raises(ClassificationError):
            check_encoding(library, ENERGY)
