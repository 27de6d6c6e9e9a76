import numpy as np
import pytest

from dmimo import linkadapt as la


class TestDefaultTable:
    def test_eight_entries_sorted(self):
        table = la.default_mcs_table()
        assert len(table) == 8
        la.validate_mcs_table(table)  # strict increase in SE and threshold

    def test_modulations(self):
        mods = [e.modulation for e in la.default_mcs_table()]
        assert mods == ["qpsk"] * 3 + ["qam16"] * 3 + ["qam64"] * 2

    def test_threshold_rule(self):
        for e in la.default_mcs_table():
            expected = 10 * np.log10(2 ** e.spectral_eff_bpshz - 1) + 2.0
            assert e.snr_threshold_db == pytest.approx(expected)


class TestCsvOverride:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "mcs.csv"
        p.write_text(
            "index,modulation,code_rate,snr_threshold_db\n"
            "0,qpsk,0.5,2.0\n1,qam16,0.5,8.0\n"
        )
        table = la.load_mcs_table_csv(str(p))
        assert [e.index for e in table] == [0, 1]
        assert table[1].spectral_eff_bpshz == pytest.approx(2.0)

    def test_non_increasing_rejected(self, tmp_path):
        p = tmp_path / "mcs.csv"
        p.write_text(
            "index,modulation,code_rate,snr_threshold_db\n"
            "0,qpsk,0.5,8.0\n1,qam16,0.5,2.0\n"
        )
        with pytest.raises(ValueError):
            la.load_mcs_table_csv(str(p))


class TestEffectiveSnr:
    def test_fixed_point(self):
        for s in (-10.0, 0.0, 17.0):
            assert la.effective_snr_db([s, s, s]) == pytest.approx(s, abs=1e-9)

    def test_zero_linear(self):
        out = la.effective_snr_db([-300.0, -300.0])
        assert 10 ** (out / 10) == pytest.approx(0.0, abs=1e-12)

    def test_three_one_linear(self):
        # {3, 1} linear -> 2^((2+1)/2) - 1 = 1.828 linear
        snrs_db = 10 * np.log10([3.0, 1.0])
        out_lin = 10 ** (la.effective_snr_db(snrs_db) / 10)
        assert out_lin == pytest.approx(1.828, abs=1e-3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            la.effective_snr_db([])


class TestBler:
    def setup_method(self):
        self.mcs = la.default_mcs_table()[3]

    def test_midpoint(self):
        assert la.bler(self.mcs.snr_threshold_db, self.mcs) == pytest.approx(0.5)

    def test_plus_6db_floored(self):
        # logistic value 6.1e-6 falls at the 1e-6 clipping region
        assert la.bler(self.mcs.snr_threshold_db + 6.0, self.mcs) == pytest.approx(
            6.1e-6, rel=0.01
        )

    def test_minus_6db_saturates(self):
        assert la.bler(self.mcs.snr_threshold_db - 6.0, self.mcs) == pytest.approx(1.0, abs=1e-4)

    def test_deep_floor(self):
        assert la.bler(self.mcs.snr_threshold_db + 60.0, self.mcs) == la.BLER_FLOOR


class TestMaxThroughput:
    def setup_method(self):
        self.table = la.default_mcs_table()
        self.bw = 7.68e6

    def test_below_all_thresholds(self):
        rep = la.max_throughput(-20.0, self.table, self.bw)
        assert rep.chosen_mcs is None and rep.goodput_mbps == 0.0

    def test_high_snr_top_entry(self):
        rep = la.max_throughput(40.0, self.table, self.bw)
        assert rep.chosen_mcs == self.table[-1].index

    def test_goodput_monotone(self):
        grid = np.arange(-20.0, 45.0, 0.1)
        good = [la.max_throughput(s, self.table, self.bw).goodput_mbps for s in grid]
        assert all(b >= a - 1e-12 for a, b in zip(good, good[1:]))

    def test_mcs_index_monotone(self):
        grid = np.arange(-20.0, 45.0, 0.1)
        idx = [
            -1 if (r := la.max_throughput(s, self.table, self.bw)).chosen_mcs is None
            else r.chosen_mcs
            for s in grid
        ]
        assert all(b >= a for a, b in zip(idx, idx[1:]))

    def test_deterministic(self):
        mid = 0.5 * (self.table[2].snr_threshold_db + self.table[3].snr_threshold_db)
        a = la.max_throughput(mid, self.table, self.bw)
        b = la.max_throughput(mid, self.table, self.bw)
        assert a == b

    def test_goodput_accounting(self):
        rep = la.max_throughput(40.0, self.table, self.bw, overhead=0.86)
        top = self.table[-1]
        expected = top.spectral_eff_bpshz * (1 - rep.bler) * self.bw * 0.86 / 1e6
        assert rep.goodput_mbps == pytest.approx(expected)

    def test_bad_overhead_rejected(self):
        with pytest.raises(ValueError):
            la.max_throughput(10.0, self.table, self.bw, overhead=0.0)

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            la.max_throughput(10.0, [], self.bw)
