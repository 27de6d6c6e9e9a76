import numpy as np
import pytest

from dmimo import precoding as pc


def _composite(blocks, counts):
    return pc.CompositeChannel(
        per_ue_blocks=tuple(np.asarray(b, dtype=complex) for b in blocks),
        node_antenna_counts=tuple(counts),
    )


def _random_composite(rng, n_ues=2, ue_ants=2, counts=(4, 2, 2)):
    n_tx = sum(counts)
    blocks = [
        (rng.standard_normal((ue_ants, n_tx)) + 1j * rng.standard_normal((ue_ants, n_tx)))
        / np.sqrt(2)
        for _ in range(n_ues)
    ]
    return _composite(blocks, counts)


class TestZfPrecoder:
    def test_identity_channel(self):
        h = _composite([np.eye(2)], [2])
        res = pc.zf_precoder(h, [0.0], 0.0)
        w = res.precoder
        # proportional to identity, equal SINR on both streams
        assert abs(w[0, 1]) < 1e-12 and abs(w[1, 0]) < 1e-12
        assert res.per_ue_sinr_db[0][0] == pytest.approx(res.per_ue_sinr_db[0][1])

    def test_nulling_quality(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            h = _random_composite(rng)
            res = pc.zf_precoder(h, [35.0, 26.0, 26.0], -98.0)
            g = h.stacked() @ res.precoder
            off = np.abs(g - np.diag(np.diag(g)))
            assert off.max() / np.abs(np.diag(g)).min() < 1e-9

    def test_mrt_coincidence_single_stream(self):
        # H = [1, 1]: ZF direction is the matched filter, so the received
        # amplitude is sqrt(2) x a single antenna driven at the same total power
        h = _composite([np.array([[1.0, 1.0]])], [1, 1])
        res = pc.zf_precoder(h, [0.0, 0.0], 0.0)
        rx_amp = abs((h.stacked() @ res.precoder)[0, 0])
        single = _composite([np.array([[1.0]])], [1])
        single_amp = abs(
            (single.stacked() @ pc.zf_precoder(single, [10 * np.log10(2.0)], 0.0).precoder)[0, 0]
        )
        assert rx_amp == pytest.approx(np.sqrt(2.0) * single_amp, rel=1e-12)
        assert rx_amp == pytest.approx(2.0, rel=1e-12)

    def test_tightest_node_budget_binds(self):
        rng = np.random.default_rng(1)
        h = _random_composite(rng)
        budgets = [35.0, 26.0, 26.0]
        res = pc.zf_precoder(h, budgets, -98.0)
        starts = np.cumsum((0,) + h.node_antenna_counts)
        emitted = [
            np.sum(np.abs(res.precoder[starts[i]: starts[i + 1], :]) ** 2)
            for i in range(3)
        ]
        slack = [pc.dbm_to_mw(b) - e for b, e in zip(budgets, emitted)]
        assert min(slack) == pytest.approx(0.0, abs=1e-9 * pc.dbm_to_mw(max(budgets)))
        assert all(s >= -1e-9 for s in slack)

    def test_rank_deficient_rejected(self):
        h = _composite([np.ones((2, 4))], [4])
        with pytest.raises(pc.ZfInfeasibleError, match="rank"):
            pc.zf_precoder(h, [35.0], -98.0)

    def test_too_many_streams_rejected(self):
        rng = np.random.default_rng(2)
        h = _random_composite(rng, n_ues=3, ue_ants=2, counts=(4,))
        with pytest.raises(pc.ZfInfeasibleError):
            pc.zf_precoder(h, [35.0], -98.0)

    def test_empty_ue_list_rejected(self):
        with pytest.raises(ValueError):
            pc.zf_precoder(_composite([], [4]), [35.0], -98.0)


class TestCapacities:
    def test_sum_capacity_zero_sinr(self):
        res = pc.PrecodingResult(np.zeros((2, 1)), ((-300.0,),), (0.0,))
        assert pc.sum_capacity_bpshz(res) == 0.0

    def test_single_stream_10db(self):
        res = pc.PrecodingResult(np.zeros((2, 1)), ((10.0,),), (float(np.log2(11.0)),))
        assert pc.sum_capacity_bpshz(res) == pytest.approx(3.459, abs=1e-3)

    def test_additivity(self):
        r = float(np.log2(11.0))
        res = pc.PrecodingResult(np.zeros((2, 2)), ((10.0,), (10.0,)), (r, r))
        assert pc.sum_capacity_bpshz(res) == pytest.approx(2 * r)

    def test_baseline_dead_channel(self):
        assert pc.baseline_capacity_bpshz(np.zeros((2, 2)), 35.0, -98.0) == 0.0

    def test_baseline_siso_unit_snr(self):
        # |h|^2 P / sigma^2 = 1 -> exactly 1 bps/Hz
        assert pc.baseline_capacity_bpshz(np.ones((1, 1)), 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_baseline_2x2_identity(self):
        # P/sigma^2 = 2 split over 2 antennas -> per-branch SNR 1 -> 2 bps/Hz
        cap = pc.baseline_capacity_bpshz(np.eye(2), 10 * np.log10(2.0), 0.0)
        assert cap == pytest.approx(2.0, abs=1e-12)

    def test_relative_gain(self):
        assert pc.relative_gain(5.0, 5.0) == 1.0
        assert pc.relative_gain(27.36 * 3.0, 3.0) == pytest.approx(27.36)
        assert pc.relative_gain(6.14 * 3.0, 3.0) == pytest.approx(6.14)
        with pytest.raises(ValueError, match="undefined relative gain"):
            pc.relative_gain(1.0, 0.0)
