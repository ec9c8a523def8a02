"""
Tests for operation counters, blinding samplers and scale planning.
"""

import math

import numpy as np
import pytest
from scipy import stats

from spamcraft.crypto.fixedpoint import CodecParams
from spamcraft.exceptions import ConfigurationError
from spamcraft.protocol import STEP_GROUPS, BlindingSampler, OpCounters, ScalePlan, StepTimer, plan_scales


class TestOpCounters:
    """Counting encryptions, decryptions and traffic."""

    def test_reencryption_counts_once(self):
        counters = OpCounters()
        counters.count_encrypt(5)
        counters.count_decrypt(3)
        counters.count_reencrypt(2)
        assert counters.cipher_operations == 6

    def test_traffic_by_direction_and_step(self):
        counters = OpCounters()
        counters.count_sent('bob->alice', 'weights', 10)
        counters.count_sent('alice->bob', 'margins', 4)
        counters.count_sent('bob->alice', 'exponentials', 4)
        assert counters.elements_sent == 18
        assert counters.sent['bob->alice'] == 14
        assert counters.per_step['margins'] == 4

    def test_merge(self):
        a, b = OpCounters(), OpCounters()
        a.count_encrypt(2)
        a.count_sent('x', 'weights', 3)
        b.count_decrypt(4)
        b.count_sent('x', 'weights', 1)
        merged = a.merge(b)
        assert merged.to_dict() == {
            'encryptions': 2,
            'decryptions': 4,
            'reencryptions': 0,
            'cipher_operations': 6,
            'elements_sent': 4,
        }
        assert a.encryptions == 2 and a.decryptions == 0


def test_step_timer_reports_every_group():
    timer = StepTimer()
    with timer.step("reciprocal"):
        pass
    frame = timer.to_frame()
    assert frame['steps'].tolist() == list(STEP_GROUPS)
    assert frame.loc[frame['steps'] == "reciprocal", 'seconds'].item() >= 0.0
    assert frame.loc[frame['steps'] == "encrypt-weights", 'seconds'].item() == 0.0
    assert timer.merge(timer).total == pytest.approx(2 * timer.total)


class TestBlindingSampler:
    """Additive and multiplicative blind distributions."""

    def test_additive_range(self):
        sampler = BlindingSampler(r_bound=5.0, rng=np.random.default_rng(0))
        r = sampler.additive(10_000)
        assert r.min() >= -5.0 and r.max() <= 5.0
        assert abs(r.mean()) < 0.2

    def test_additive_is_uniform_on_the_range(self):
        r_bound = 32.0
        r = BlindingSampler(r_bound=r_bound, rng=np.random.default_rng(2)).additive(100_000)
        result = stats.kstest(r, 'uniform', args=(-r_bound, 2 * r_bound))
        assert result.pvalue > 0.01

    def test_seeded_draws_repeat(self):
        a = BlindingSampler(8.0, 1000, rng=np.random.default_rng(4))
        b = BlindingSampler(8.0, 1000, rng=np.random.default_rng(4))
        assert a.additive(5).tolist() == b.additive(5).tolist()
        assert a.multiplicative(5) == b.multiplicative(5)

    def test_multiplicative_follows_reciprocal_law(self):
        q_bound = 1000
        draws = np.array(BlindingSampler(1.0, q_bound, rng=np.random.default_rng(7)).multiplicative(20_000))
        assert draws.min() >= 1 and draws.max() <= q_bound
        for k in (1, 9, 99):
            expected = math.log(k + 1) / math.log(q_bound)
            assert np.mean(draws <= k) == pytest.approx(expected, abs=0.02)

    def test_unseeded_samplers_differ(self):
        a, b = BlindingSampler(8.0, 1000), BlindingSampler(8.0, 1000)
        assert a.additive(4).tolist() != b.additive(4).tolist()

    def test_trivial_domain(self):
        assert BlindingSampler(1.0, 1).multiplicative(4) == [1, 1, 1, 1]

    @pytest.mark.parametrize("r_bound,q_bound", [(-1.0, 2), (1.0, 0)])
    def test_invalid_bounds(self, r_bound, q_bound):
        with pytest.raises(ValueError):
            BlindingSampler(r_bound, q_bound)


class TestScalePlan:
    """Scale exponents and blind domain for a key."""

    def test_default_plan_for_256_bit_key(self, keys256):
        plan = plan_scales(CodecParams.for_key(keys256.public), blind_bound=32.0, margin_bound=16.0,
                           block_size=100, eta=0.001)
        assert plan.exp_scale == 4
        assert plan.unblind_scale == 4
        assert plan.logit_scale == 8
        assert plan.recip_scale == 11
        assert plan.update_scale == 12
        assert plan.q_bound >= 2
        assert plan.share_bound == 48.0

    def test_smaller_blinds_need_fewer_digits(self, keys256):
        codec = CodecParams.for_key(keys256.public)
        wide = plan_scales(codec, blind_bound=32.0)
        narrow = plan_scales(codec, blind_bound=4.0)
        assert narrow.exp_scale < wide.exp_scale
        assert narrow.q_bound >= wide.q_bound

    def test_key_too_small(self, keys64):
        with pytest.raises(ConfigurationError):
            plan_scales(CodecParams.for_key(keys64.public), blind_bound=32.0)

    def test_fields_for_the_handshake(self, keys256):
        plan = plan_scales(CodecParams.for_key(keys256.public), blind_bound=32.0)
        fields = plan.to_fields()
        assert fields['blind_bound'] == '32.0'
        assert ScalePlan.from_fields(fields) == plan
