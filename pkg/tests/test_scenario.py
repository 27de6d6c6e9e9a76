import numpy as np
import pytest

from dmimo import scenario as sn


def _node(nid=0, kind=sn.NodeKind.UE, ants=2, pwr=23.0, pos=(0, 0, 0), vel=(0, 0, 0)):
    return sn.NodeSpec(
        id=nid, kind=kind, num_antennas=ants, tx_power_dbm=pwr,
        position_m=tuple(float(x) for x in pos),
        velocity_mps=tuple(float(x) for x in vel),
    )


def _scenario(nodes):
    return sn.Scenario(
        nodes=tuple(nodes),
        ofdm=sn.OfdmConfig(),
        mobility=sn.MobilityProfile.from_label("low"),
        noise_figure_db=7.0,
        seed=1,
        duration_slots=8,
    )


class TestValidate:
    def test_zero_ues_flagged(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0)])
        assert any("at least one UE" in v for v in sn.validate(sc))

    def test_two_gnbs_flagged(self):
        sc = _scenario([
            _node(0, sn.NodeKind.GNB, 4, 35.0),
            _node(1, sn.NodeKind.GNB, 4, 35.0),
            _node(2, sn.NodeKind.UE),
        ])
        assert any("exactly one gNB" in v for v in sn.validate(sc))

    def test_reference_setup_valid(self):
        # 1 gNB with 4 antennas at 35 dBm, RUs with 2 antennas at 26 dBm
        nodes = [_node(0, sn.NodeKind.GNB, 4, 35.0)]
        nodes += [_node(i, sn.NodeKind.RU, 2, 26.0, pos=(30 * i, 0, 0)) for i in (1, 2, 3, 4)]
        nodes += [_node(101, sn.NodeKind.UE, 2, 23.0, pos=(300, 0, 0))]
        assert sn.validate(_scenario(nodes)) == []

    def test_duplicate_ids_flagged(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0), _node(0)])
        assert any("unique" in v for v in sn.validate(sc))

    def test_pure(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0)])
        assert sn.validate(sc) == sn.validate(sc)


class TestDoppler:
    def test_stationary(self):
        assert sn.doppler_hz(0.0, 3.5e9) == 0.0

    def test_high_mobility_speed(self):
        # 10 km/h at 3.5 GHz
        assert sn.doppler_hz(2.7778, 3.5e9) == pytest.approx(32.43, abs=0.01)

    def test_medium_mobility_speed(self):
        # 3 km/h at 3.5 GHz
        assert sn.doppler_hz(0.8333, 3.5e9) == pytest.approx(9.73, abs=0.01)

    def test_linear_in_speed(self):
        for v in (0.5, 3.0, 27.0):
            assert sn.doppler_hz(2 * v, 3.5e9) == pytest.approx(2 * sn.doppler_hz(v, 3.5e9))

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            sn.doppler_hz(-1.0, 3.5e9)

    def test_link_doppler_adds_ground_speeds(self):
        tx = _node(0, vel=(1.0, 0, 0))
        rx = _node(1, vel=(0, 2.0, 0))
        assert sn.link_doppler_hz(tx, rx, 3.5e9) == pytest.approx(sn.doppler_hz(3.0, 3.5e9))


class TestAdvancePositions:
    def test_zero_dt_identity(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0, vel=(5, 0, 0)), _node(1)])
        assert sn.advance_positions(sc, 0.0) == sc

    def test_linear_motion(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0, vel=(1, 0, 0)), _node(1)])
        moved = sn.advance_positions(sc, 2.0)
        assert moved.nodes[0].position_m == (2.0, 0.0, 0.0)

    def test_additivity(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0, vel=(1.5, -2.0, 0))])
        once = sn.advance_positions(sc, 2.0)
        twice = sn.advance_positions(sn.advance_positions(sc, 1.0), 1.0)
        np.testing.assert_allclose(once.nodes[0].position_m, twice.nodes[0].position_m)

    def test_preserves_ids_and_antennas(self):
        sc = _scenario([_node(0, sn.NodeKind.GNB, 4, 35.0), _node(5, ants=3)])
        moved = sn.advance_positions(sc, 1.0)
        assert [n.id for n in moved.nodes] == [0, 5]
        assert [n.num_antennas for n in moved.nodes] == [4, 3]


class TestMobilityProfile:
    def test_table_speeds(self):
        assert sn.MobilityProfile.from_label("low") == sn.MobilityProfile(
            sn.MobilityLabel.LOW, 0.1, 0.01
        )
        assert sn.MobilityProfile.from_label("medium").gnb_speed_kmh == 3.0
        assert sn.MobilityProfile.from_label("high").ue_relative_speed_kmh == 1.0

    def test_custom_needs_speeds(self):
        with pytest.raises(ValueError):
            sn.MobilityProfile.from_label("custom")


class TestOfdmConfig:
    def test_default_numerology(self):
        ofdm = sn.OfdmConfig()
        assert ofdm.bandwidth_hz() == pytest.approx(7.68e6)
        assert ofdm.slot_duration_s() == pytest.approx(14 / 15e3)
