import math

import numpy as np
import pytest

from codedcache.bounds import distinct_files_law, yma_bound, yma_bound_bruteforce
from codedcache.harness import (
    CSV_COLUMNS,
    SCHEMES,
    ExperimentSpec,
    export,
    monte_carlo,
    read_json,
    realize,
    run_trial,
    run_trials,
    summarize,
    trace,
    write_csv,
)
from codedcache.model import SystemConfig


def test_bound_small_values():
    assert yma_bound(SystemConfig(2, 2, 1, 1.0)) == pytest.approx(0.625, abs=1e-15)
    assert yma_bound(SystemConfig(4, 8, 1, 4.0)) == 0
    for m in (0.1, 0.5, 1.0):
        assert yma_bound(SystemConfig(1, 1, 1, m)) == pytest.approx(1 - m)


def test_bound_zero_memory_is_uncoded_limit():
    with pytest.warns(UserWarning):
        value = yma_bound(SystemConfig(2, 2, 1, 0.0))
    assert value == pytest.approx(1.5)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_bound_matches_enumeration(n, k):
    for m in np.arange(0.5, n + 0.25, 0.5):
        cfg = SystemConfig(n, k, 1, float(m))
        assert abs(yma_bound(cfg) - yma_bound_bruteforce(cfg)) < 1e-12


def test_bound_reference_value():
    # frozen from the brute-force enumeration over all 4**8 demand vectors
    assert yma_bound(SystemConfig(4, 8, 1, 1.0)) == pytest.approx(1.9216017723083496, abs=1e-12)


def test_bound_nonuniform_is_sampled():
    cfg = SystemConfig(4, 8, 1, 1.0)
    law = distinct_files_law(cfg, "zipf:0", samples=50_000, seed=1)
    assert law[4] == pytest.approx(0.6229, abs=0.01)
    assert yma_bound(cfg, "zipf:1.2") < yma_bound(cfg)


def small_spec(**kw):
    base = dict(num_files=3, num_users=4, file_bits=24, memories=(0.5, 1.5), trials=3, seed=7)
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        small_spec(trials=0)
    with pytest.raises(ValueError):
        small_spec(schemes=("mhcd", "bogus"))
    with pytest.raises(ValueError):
        small_spec(memories=(4.0,))


def test_trial_determinism_and_shared_realization():
    spec = small_spec()
    assert run_trial(spec, "ahglc", 1.5, 2) == run_trial(spec, "ahglc", 1.5, 2)
    a, b = realize(spec, 1.5, 2), realize(spec, 1.5, 2)
    assert a.cache == b.cache and a.demand == b.demand
    results = run_trials(spec, 1.5, 2)
    assert len({r.seed for r in results}) == 1
    assert [r.scheme for r in results] == list(SCHEMES)


def test_trial_edge_memories():
    spec = small_spec(memories=(0.0, 3.0))
    for r in run_trials(spec, 3.0, 0):
        assert r.load_files == 0 and r.decodable is True
    real = realize(spec, 0.0, 0)
    r = run_trial(spec, "uncoded", 0.0, 0)
    assert r.load_files == len(real.demand.distinct)
    assert r.load_files == r.load_bits / spec.file_bits


def test_more_trials_keep_prefix():
    short = monte_carlo(small_spec(trials=2))
    longer = monte_carlo(small_spec(trials=4))
    assert set(short) <= set(longer)


def test_single_trial_statistics():
    spec = small_spec(trials=1, memories=(1.0,), schemes=("mhcd",))
    results = monte_carlo(spec)
    (s,) = summarize(results, spec)
    assert s.mean == results[0].load_files and s.std == 0 and not s.std_defined


def test_scheme_failure_is_recorded(monkeypatch):
    import codedcache.harness as h

    def broken(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(h, "hcd_delivery", broken)
    r = run_trial(small_spec(), "hcd", 0.5, 0)
    assert r.failed and "boom" in r.error
    (s,) = summarize([r])
    assert s.failures == 1


def test_parallel_matches_serial():
    spec = small_spec(trials=2, schemes=("yma", "ahglc"))
    par = small_spec(trials=2, schemes=("yma", "ahglc"), workers=2)
    assert monte_carlo(spec) == monte_carlo(par)


def test_csv_export(tmp_path):
    spec = small_spec(trials=1, memories=(3.0,), schemes=("hcd",))
    results = monte_carlo(spec)
    summary = export(results, "csv", tmp_path / "out.csv", spec)
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 2
    rows = summary.read_text().splitlines()
    assert rows[1].split(",")[-1] == "0.0"


def test_csv_is_reproducible(tmp_path):
    spec = small_spec()
    export(monte_carlo(spec), "csv", tmp_path / "a.csv", spec)
    export(monte_carlo(spec), "csv", tmp_path / "b.csv", spec)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_json_roundtrip(tmp_path):
    spec = small_spec()
    results = monte_carlo(spec)
    export(results, "json", tmp_path / "r.json", spec)
    spec2, back = read_json(tmp_path / "r.json")
    assert spec2 == spec and back == results
    assert summarize(back, spec2) == summarize(results, spec)


def test_unwritable_path_names_the_path(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    results = monte_carlo(small_spec(trials=1, schemes=("yma",)))
    with pytest.raises(OSError, match="blocker"):
        write_csv(results, blocker / "x.csv")
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "empty.csv")


def test_trace_contents():
    spec = small_spec()
    record = trace(spec, 1.5, 0, ["mhcd", "ahglc"])
    assert set(record["schemes"]) == {"mhcd", "ahglc"}
    mhcd = record["schemes"]["mhcd"]
    assert mhcd["total_bits"] == sum(c["length"] for c in mhcd["codewords"])
    assert all(mhcd["decodable"])
    assert record["schemes"]["ahglc"]["info"]["colors"] >= 1


def test_loads_decrease_with_memory():
    spec = small_spec(memories=(0.5, 1.5, 2.5), trials=20, verify=False)
    stats = {(s.scheme, s.memory): s for s in summarize(monte_carlo(spec), spec)}
    for name in SCHEMES:
        for lo, hi in ((0.5, 1.5), (1.5, 2.5)):
            a, b = stats[(name, lo)], stats[(name, hi)]
            assert b.mean <= a.mean + a.ci95 + b.ci95
            assert not math.isnan(a.mean)
