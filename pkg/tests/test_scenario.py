import dataclasses

import pytest

from pccplace.model import instance_to_json, validate_instance
from pccplace.scenario import (
    GenerationError,
    ScenarioParams,
    generate_instance,
    params_from_dict,
    params_to_dict,
    validate_params,
)


class TestGenerateInstance:
    def test_candidate_count_and_degree_bounds(self):
        params = ScenarioParams(num_candidates=20)
        inst = generate_instance(params, seed=42)
        assert len(inst.network.candidates) == 20
        degrees = {n: 0 for n in inst.network.nodes}
        for key in inst.network.link_map:
            degrees[key[0]] += 1
            degrees[key[1]] += 1
        for k in inst.network.candidates:
            assert 2 <= degrees[k] <= 5

    @pytest.mark.parametrize("seed", range(100))
    def test_always_valid_connected_and_degree_bounded(self, seed):
        params = ScenarioParams(num_candidates=6, batch_size=3)
        inst = generate_instance(params, seed=seed)
        assert validate_instance(inst) == []
        assert inst.network.is_connected()
        degrees = {n: 0 for n in inst.network.nodes}
        for key in inst.network.link_map:
            degrees[key[0]] += 1
            degrees[key[1]] += 1
        for k in inst.network.candidates:
            assert 2 <= degrees[k] <= 5

    @pytest.mark.parametrize("seed", range(20))
    def test_mobility_mass_sums_to_one(self, seed):
        inst = generate_instance(ScenarioParams(num_candidates=8), seed=seed)
        mass = inst.mobility.stay_probability + sum(
            inst.mobility.destinations.values())
        assert mass == pytest.approx(1.0, abs=1e-9)

    def test_no_mobility_limit(self):
        params = ScenarioParams(num_candidates=8, stay_probability=1.0)
        inst = generate_instance(params, seed=3)
        assert inst.mobility.destinations  # still generated
        assert all(p == 0.0 for p in inst.mobility.destinations.values())
        weights = inst.destination_weights
        assert weights[inst.network.attachment] == 1.0

    def test_deterministic_bytes(self):
        params = ScenarioParams(num_candidates=12, batch_size=20)
        a = instance_to_json(generate_instance(params, seed=99))
        b = instance_to_json(generate_instance(params, seed=99))
        assert a == b

    def test_different_seeds_differ(self):
        params = ScenarioParams(num_candidates=12, batch_size=20)
        a = instance_to_json(generate_instance(params, seed=1))
        b = instance_to_json(generate_instance(params, seed=2))
        assert a != b

    def test_gateway_is_node_zero_and_candidate(self):
        inst = generate_instance(ScenarioParams(num_candidates=5), seed=0)
        assert inst.network.gateway == sorted(inst.network.nodes)[0]
        assert inst.network.gateway in inst.network.candidates

    def test_attachment_is_not_gateway(self):
        for seed in range(10):
            inst = generate_instance(ScenarioParams(num_candidates=5), seed=seed)
            assert inst.network.attachment != inst.network.gateway

    def test_chains_are_distinct_nfs_within_length_range(self):
        params = ScenarioParams(num_candidates=8, batch_size=30,
                                chain_length=(3, 5))
        inst = generate_instance(params, seed=11)
        for req in inst.requests:
            assert 3 <= len(req.chain) <= 5
            assert len(set(req.chain)) == len(req.chain)

    def test_heads_are_candidates(self):
        inst = generate_instance(ScenarioParams(num_candidates=8), seed=5)
        for req in inst.requests:
            assert req.heads <= inst.network.candidates

    def test_flow_rates_within_range(self):
        inst = generate_instance(ScenarioParams(num_candidates=8), seed=6)
        for req in inst.requests:
            assert 0.064 <= req.flow_rate_mbps <= 10.0

    def test_placement_cost_default_zero_but_settable(self):
        inst = generate_instance(ScenarioParams(num_candidates=5), seed=1)
        assert inst.placement_cost == {}
        priced = generate_instance(
            ScenarioParams(num_candidates=5, placement_cost=3.0), seed=1)
        assert priced.placing_cost("f0", sorted(priced.network.candidates)[0]) == 3.0
        # pricing must not perturb any other draw
        unpriced = dataclasses.replace(priced, placement_cost={})
        base = generate_instance(ScenarioParams(num_candidates=5), seed=1)
        assert instance_to_json(unpriced) == instance_to_json(base)

    def test_changing_one_stream_leaves_others_alone(self):
        # different flow-rate range: graph, catalog, mobility unchanged
        a = generate_instance(ScenarioParams(num_candidates=6), seed=4)
        b = generate_instance(
            ScenarioParams(num_candidates=6, flow_rate_mbps=(1.0, 2.0)), seed=4)
        assert a.network == b.network
        assert a.catalog == b.catalog
        assert a.mobility == b.mobility
        assert [r.chain for r in a.requests] == [r.chain for r in b.requests]
        assert [r.heads for r in a.requests] == [r.heads for r in b.requests]

    def test_too_small_for_degree_raises(self):
        with pytest.raises(GenerationError):
            generate_instance(
                ScenarioParams(num_candidates=1, transit_fraction=0.0), seed=0)


class TestParams:
    def test_defaults_are_valid(self):
        validate_params(ScenarioParams())

    def test_bad_range_names_field(self):
        with pytest.raises(ValueError, match="chain_length"):
            validate_params(ScenarioParams(chain_length=(5, 3)))
        with pytest.raises(ValueError, match="batch_size"):
            validate_params(ScenarioParams(batch_size=0))
        with pytest.raises(ValueError, match="stay_probability"):
            validate_params(ScenarioParams(stay_probability=1.5))

    def test_chain_longer_than_catalog_rejected(self):
        with pytest.raises(ValueError, match="chain_length"):
            validate_params(ScenarioParams(catalog_size=3, chain_length=(3, 5)))

    def test_round_trip_dict(self):
        params = ScenarioParams(num_candidates=25, stay_probability=0.5)
        again = params_from_dict(params_to_dict(params))
        assert again == params

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="mystery"):
            params_from_dict({"mystery": 1})

    def test_range_shape_enforced(self):
        with pytest.raises(ValueError, match="chain_length"):
            params_from_dict({"chain_length": 4})

    def test_overrides_from_dict(self):
        params = params_from_dict({"num_candidates": 30,
                                   "chain_length": [2, 4],
                                   "stay_probability": None})
        assert params.num_candidates == 30
        assert params.chain_length == (2, 4)
        assert params.stay_probability is None
