import json
import math

import numpy as np
import pytest

from amplab.config import ExperimentConfig
from amplab.experiments import (boundary_mask, heteroskedastic_noise, map_trials, pooled_rel_err, run_experiment,
                                sbm_probabilities, thread_count)
from amplab.io import sha256_file


def _cfg(kind, params=None, trials=1, seed=0):
    return ExperimentConfig.from_dict({"kind": kind, "trials": trials, "seed": seed, "params": params or {}})


def _artifacts(out):
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and p.name != "timing.json"}


def test_zero_horizon_gives_empty_summary(tmp_path):
    res = run_experiment(_cfg("se_check", {"T": 0}), tmp_path)
    assert res.ok and res.summary["results"] == {}
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "summary.json").exists()


def test_manifest_lists_every_file_with_hash(tmp_path):
    run_experiment(_cfg("se_check", {"n": 300, "T": 2, "se_samples": 20_000}, trials=2), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    listed = {f["path"]: f["sha256"] for f in manifest["files"]}
    on_disk = {p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*") if p.is_file()}
    assert on_disk - {"manifest.json"} == set(listed)
    for path, digest in listed.items():
        if digest is not None:
            assert sha256_file(tmp_path / path) == digest
    assert listed["timing.json"] is None
    assert manifest["rng"]["master_seed"] == 0 and manifest["config"]["kind"] == "se_check"


def test_rerun_and_thread_count_are_byte_identical(tmp_path, monkeypatch):
    cfg = {"n": 256, "T": 3, "se_samples": 20_000,
           "ensembles": [{"name": "goe", "spec": {"kind": "GOE"}},
                         {"name": "hadamard", "spec": {"kind": "SymInvariant",
                                                       "eigenvalue_law": {"kind": "semicircle"}}}]}
    monkeypatch.setenv("AMPLAB_THREADS", "1")
    run_experiment(_cfg("universality_sym", cfg, trials=3), tmp_path / "a")
    run_experiment(_cfg("universality_sym", cfg, trials=3), tmp_path / "b")
    monkeypatch.setenv("AMPLAB_THREADS", "3")
    assert thread_count() == 3
    run_experiment(_cfg("universality_sym", cfg, trials=3), tmp_path / "c")
    a, b, c = (_artifacts(tmp_path / d) for d in "abc")
    assert a == b == c and len(a) > 5


def test_seed_changes_artifacts(tmp_path):
    p = {"n": 200, "T": 2, "se_samples": 5000}
    run_experiment(_cfg("se_check", p, seed=1), tmp_path / "a")
    run_experiment(_cfg("se_check", p, seed=2), tmp_path / "b")
    assert _artifacts(tmp_path / "a")["trials/GOE/trial_0000.csv"] != \
        _artifacts(tmp_path / "b")["trials/GOE/trial_0000.csv"]


def test_tn_universality_path_three_ensembles(tmp_path):
    ens = [{"name": "goe", "spec": {"kind": "GOE"}},
           {"name": "rademacher", "spec": {"kind": "GeneralizedWigner", "entry_law": "rademacher"}},
           {"name": "hadamard", "spec": {"kind": "SymInvariant", "eigenvalue_law": {"kind": "semicircle"}}}]
    res = run_experiment(_cfg("tn_universality", {"n": 512, "ensembles": ens}, trials=30), tmp_path)
    for name in ("goe", "rademacher", "hadamard"):
        r = res.summary["ensembles"][name]
        assert r["limit"] == pytest.approx(1.0)
        assert abs(r["mc_mean"] - 1.0) <= 3 * r["mc_se"]
    assert res.ok


def test_limval_audit_routes_agree(tmp_path):
    res = run_experiment(_cfg("limval_audit", {"max_edges": 3}), tmp_path)
    assert res.ok and res.summary["n_trees"] == 5


def test_pooled_relative_error():
    moms = np.array([[1.1, 2.0], [0.9, 2.2]])
    assert np.allclose(pooled_rel_err(moms, [1.0, 2.0]), [0.0, 0.05])


def test_boundary_mask():
    # in-band points plus both neighbours of each crossing of 1/2
    assert boundary_mask([1.0, 0.96, 0.5, 0.04, 0.0]).tolist() == [False, True, True, True, False]
    assert boundary_mask([1.0, 1.0, 0.0, 0.0]).tolist() == [False, True, True, False]
    assert not boundary_mask([1.0, 1.0, 1.0]).any()


def test_sbm_probabilities_hit_targets():
    n, c, lam = 4000, 5.0, 2.0
    p, q = sbm_probabilities(n, c, lam)
    pbar = (p + q) / 2
    assert pbar == pytest.approx(c * math.log(n) / n)
    assert (p - q) / 2 == pytest.approx(math.sqrt(lam * pbar * (1 - pbar) / n))


@pytest.mark.parametrize("profile", ["poisson_rank1", "missing_data"])
def test_heteroskedastic_noise_shapes(profile):
    E, V = heteroskedastic_noise(profile, 300, 500, np.random.default_rng(0))
    assert V.shape == E.shape == (300, 500) and np.all(V > 0)
    # standardized noise has mean 0 and unit variance
    Zs = E / np.sqrt(V)
    assert abs(Zs.mean()) <= 0.01 and abs(np.mean(Zs ** 2) - 1) <= 0.02


def test_map_trials_preserves_order(monkeypatch):
    monkeypatch.setenv("AMPLAB_THREADS", "4")
    assert map_trials(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    monkeypatch.setenv("AMPLAB_THREADS", "zero")
    assert thread_count() == 1
