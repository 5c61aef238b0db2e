"""Application models, module catalogs, configs and the synthetic generator."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netgap import (
    InputError,
    RunConfig,
    generate_synthetic_usecase,
    load_application_model,
    load_config,
    load_module_catalog,
    save_application_model,
    save_module_catalog,
)
from netgap.config import config_from_dict, config_to_dict
from netgap.model import (
    ApplicationModel,
    Message,
    Process,
    module_catalog_from_dict,
)

from conftest import data_text


def two_process_model(bits=1000.0, period=10.0):
    procs = [
        Process("p0", "APP", period_ms=50.0, compute_mops=1.0),
        Process("p1", "APP", period_ms=50.0, compute_mops=1.0),
    ]
    msgs = [Message("m0", "p0", "p1", size_bits=bits, period_ms=period)]
    return ApplicationModel(procs, msgs)


def test_bandwidth_is_size_over_period():
    model = two_process_model(bits=1000.0, period=10.0)
    assert model.messages[0].bandwidth_mbps == pytest.approx(0.1)


@given(bits=st.floats(1.0, 1e7), period=st.floats(0.1, 1e4))
def test_bandwidth_times_period_recovers_size(bits, period):
    msg = Message("m", "a", "b", size_bits=bits, period_ms=period)
    assert msg.bandwidth_mbps * period * 1000.0 == pytest.approx(bits, rel=1e-12)


def test_message_validation():
    with pytest.raises(InputError):
        Message("m", "a", "a", size_bits=10, period_ms=1)
    with pytest.raises(InputError):
        Message("m", "a", "b", size_bits=0, period_ms=1)
    with pytest.raises(InputError):
        Message("m", "a", "b", size_bits=10, period_ms=0)


def test_process_validation():
    with pytest.raises(InputError):
        Process("p", "APP", period_ms=0, compute_mops=1)
    with pytest.raises(InputError):
        Process("p", "APP", period_ms=5, compute_mops=0)


def test_model_rejects_dangling_message_endpoints():
    procs = [Process("p0", "APP", 50.0, 1.0), Process("p1", "APP", 50.0, 1.0)]
    with pytest.raises(InputError):
        ApplicationModel(procs, [Message("m", "p0", "ghost", 10, 1)])


def test_model_rejects_duplicate_ids():
    twice = [Process("p0", "APP", 50.0, 1.0), Process("p0", "APP", 50.0, 1.0)]
    with pytest.raises(InputError):
        ApplicationModel(twice, [])


def test_model_round_trip(tmp_path):
    model = two_process_model()
    path = tmp_path / "model.json"
    save_application_model(model, path)
    assert load_application_model(path) == model


def test_total_compute_sums_demands():
    assert two_process_model().total_compute_mops() == pytest.approx(2.0)


# -- catalog ------------------------------------------------------------------


def test_bundled_catalog_values(catalog):
    m = catalog.spec("M")
    assert m.kind == "processing"
    assert m.compute_capacity_mops == pytest.approx(2.7)
    assert m.link_bandwidth_mbps == pytest.approx(100.0)
    assert m.cost_units == pytest.approx(10.0)
    assert catalog.spec("S").max_ports == 6
    assert catalog.spec("G").max_ports == 2
    assert catalog.spec("G").kind == "gateway"


def test_catalog_round_trip(tmp_path, catalog):
    path = tmp_path / "catalog.json"
    save_module_catalog(catalog, path)
    assert load_module_catalog(path) == catalog


def test_catalog_rejects_duplicates():
    spec = {"type_name": "S", "kind": "switch", "compute_capacity_mops": 0.0,
            "link_bandwidth_mbps": 100.0, "max_ports": 6, "duplex": "full",
            "cost_units": 10.0}
    with pytest.raises(InputError):
        module_catalog_from_dict({"module_types": [spec, dict(spec)]})


def test_catalog_requires_a_processing_kind():
    data = json.loads(data_text("catalog_avionics.json"))
    infra_only = [t for t in data["module_types"] if t["kind"] != "processing"]
    with pytest.raises(InputError):
        module_catalog_from_dict({"module_types": infra_only})


def test_catalog_rejects_nonpositive_processing_capacity():
    bad = {"kind": "processing", "compute_capacity_mops": 0.0,
           "link_bandwidth_mbps": 100.0, "max_ports": 1, "duplex": "full",
           "cost_units": 10.0}
    with pytest.raises(InputError):
        module_catalog_from_dict({"module_types": {"M": bad}})


# -- synthetic generator -------------------------------------------------------


def test_generator_honors_explicit_part_quotas():
    model = generate_synthetic_usecase(
        99, 660, {"FCP": (91, 629), "MOP": (8, 31)}, seed=1)
    assert len(model.processes) == 99
    assert len(model.messages) == 660
    by_part = {"FCP": 0, "MOP": 0}
    for m in model.messages:
        src_part = model.part_of(m.src)
        assert src_part == model.part_of(m.dst)  # traffic never crosses parts
        by_part[src_part] += 1
    assert by_part == {"FCP": 629, "MOP": 31}
    assert len(model.processes_of_part("FCP")) == 91
    assert len(model.processes_of_part("MOP")) == 8


def test_generator_is_deterministic_per_seed():
    a = generate_synthetic_usecase(20, 40, {"X": 20}, seed=7)
    b = generate_synthetic_usecase(20, 40, {"X": 20}, seed=7)
    c = generate_synthetic_usecase(20, 40, {"X": 20}, seed=8)
    assert a == b
    assert a != c


def test_generator_draws_inside_documented_ranges():
    model = generate_synthetic_usecase(40, 120, {"X": 40}, seed=3)
    for p in model.processes:
        assert 5.0 <= p.period_ms <= 200.0
        assert 0.05 <= p.compute_mops <= 0.85
    for m in model.messages:
        assert 64.0 <= m.size_bits <= 8192.0


def test_generator_defaults_to_a_single_part():
    model = generate_synthetic_usecase(12, 30, {}, seed=2)
    assert model.parts == ("APP",)
    assert len(model.processes) == 12


def test_generator_splits_open_message_budget_by_pair_count():
    model = generate_synthetic_usecase(10, 50, {"BIG": 8, "TINY": 2}, seed=5)
    count = {"BIG": 0, "TINY": 0}
    for m in model.messages:
        count[model.part_of(m.src)] += 1
    assert sum(count.values()) == 50
    # 8*7 = 56 ordered pairs vs 2*1 = 2: the large part takes nearly all
    assert count["BIG"] > count["TINY"]


def test_generator_rejects_inconsistent_totals():
    with pytest.raises(InputError):
        generate_synthetic_usecase(10, 20, {"A": 4, "B": 4}, seed=1)
    with pytest.raises(InputError):
        generate_synthetic_usecase(2, 5, {"A": (1, 5), "B": 1}, seed=1)
    with pytest.raises(InputError):
        generate_synthetic_usecase(1, 5, {"A": 1}, seed=1)


@settings(max_examples=15, deadline=None)
@given(n_p=st.integers(4, 30), per=st.integers(1, 4), seed=st.integers(0, 999))
def test_generator_output_always_validates(n_p, per, seed):
    model = generate_synthetic_usecase(n_p, n_p * per, {"X": n_p}, seed=seed)
    assert len(model.processes) == n_p
    assert len(model.messages) == n_p * per
    ids = {p.id for p in model.processes}
    for m in model.messages:
        assert m.src in ids and m.dst in ids and m.src != m.dst


# -- run configuration ----------------------------------------------------------


def test_default_config_matches_bundled_file():
    bundled = json.loads(data_text("config_default.json"))
    assert config_to_dict(RunConfig()) == bundled


def test_config_round_trip_with_overrides(tmp_path):
    cfg = RunConfig()
    cfg.sp2.max_epochs = 17
    cfg.weight_cost = 0.25
    data = config_to_dict(cfg)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    loaded = load_config(path)
    assert loaded.sp2.max_epochs == 17
    assert loaded.weight_cost == pytest.approx(0.25)


def test_partial_config_files_keep_defaults():
    cfg = config_from_dict({"sp2": {"max_epochs": 5}})
    assert cfg.sp2.max_epochs == 5
    assert cfg.sp1.population_size == RunConfig().sp1.population_size


def test_config_rejects_unknown_keys():
    with pytest.raises(InputError):
        config_from_dict({"sp2": {"max_epoch": 5}})


def test_config_validation_catches_bad_values():
    cfg = RunConfig()
    cfg.overload_threshold = 0.0
    with pytest.raises(InputError):
        cfg.validate()
    cfg = RunConfig()
    cfg.weight_latency = cfg.weight_cost = cfg.weight_resilience = 0.0
    with pytest.raises(InputError):
        cfg.validate()
    cfg = RunConfig()
    cfg.sp1.population_size = 0
    with pytest.raises(InputError):
        cfg.validate()
