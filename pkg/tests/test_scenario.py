import numpy as np

from tacd.rng import mechanism_draws, mix, substream
from tacd.scenario import Distributions, generate_scenario, target_mu_count, truncated_normal
from tacd.model import scenario_to_dict


def test_bounds_hold():
    sc = generate_scenario(40, 40, seed=1)
    for c in sc.cloudlets:
        assert 10 <= c.capacity <= 30
        assert 0.5 <= c.cost_factor <= 1.0
        assert 5 <= c.reserve_price <= 30
    for ap in sc.aps:
        assert 5 <= len(ap.members) <= 30
        for mu in ap.members:
            assert 1 <= mu.workload <= 3
            assert all(1 <= v <= 15 for v in mu.valuations)
            assert mu.bids == mu.valuations


def test_deterministic():
    assert scenario_to_dict(generate_scenario(5, 4, seed=3)) == scenario_to_dict(generate_scenario(5, 4, seed=3))
    assert scenario_to_dict(generate_scenario(5, 4, seed=3)) != scenario_to_dict(generate_scenario(5, 4, seed=4))


def test_workload_mean():
    w = truncated_normal(substream(0, "workload"), 2.0, 1.0, 1.0, 3.0, 10_000)
    assert 1.9 <= w.mean() <= 2.1
    assert w.min() >= 1.0 and w.max() <= 3.0


def test_resampling_does_not_pile_at_bounds():
    w = truncated_normal(substream(1, "workload"), 2.0, 1.0, 1.0, 3.0, 10_000)
    assert np.mean(w == 1.0) == 0.0 and np.mean(w == 3.0) == 0.0


def test_target_mu_count():
    sizes = [target_mu_count(1000, seed).n_aps for seed in range(30)]
    assert 50 <= np.mean(sizes) <= 64
    sc = target_mu_count(1000, 5)
    assert sc.n_mus >= 1000
    assert sum(len(ap.members) for ap in sc.aps[:-1]) < 1000
    assert sc.n_cloudlets == sc.n_aps
    assert target_mu_count(5, 0).n_aps == 1


def test_unbalanced_market():
    sc = target_mu_count(1000, 5, k_ratio=0.7)
    assert sc.n_cloudlets == round(0.7 * sc.n_aps)
    assert target_mu_count(100, 5, n_cloudlets=3).n_cloudlets == 3


def test_rejects_bad_sizes():
    import pytest
    with pytest.raises(ValueError):
        generate_scenario(0, 3, seed=0)
    with pytest.raises(ValueError):
        target_mu_count(4, 0)


def test_custom_distributions():
    dist = Distributions(mus_min=2, mus_max=2, valuation_min=3.0, valuation_max=4.0)
    sc = generate_scenario(3, 2, seed=0, dist=dist)
    assert all(len(ap.members) == 2 for ap in sc.aps)
    assert all(3.0 <= v <= 4.0 for ap in sc.aps for mu in ap.members for v in mu.valuations)


def test_substreams_independent_of_each_other():
    a = substream(7, "stage1", trial=3).random(4)
    b = substream(7, "shuffle", trial=3).random(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, substream(7, "stage1", trial=3).random(4))


def test_mechanism_draws_slices_by_trial():
    full = mechanism_draws(9, 6, 4, 3)
    tail = mechanism_draws(9, 2, 4, 3, first_trial=4)
    for x, y in zip(full, tail):
        np.testing.assert_array_equal(x[4:], y)
    assert sorted(full[1][0]) == [0, 1, 2, 3]


def test_mix_spreads_seeds():
    assert len({mix(1, i) for i in range(1000)}) == 1000
