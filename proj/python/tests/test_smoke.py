# Copyright 2026 The Trail Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the Python bindings."""

import json
import math

import pytest

import trail


def test_dtw_and_trend_similarity():
    assert trail.dtw_distance([1, 2, 3], [1, 2, 3]) == 0.0
    assert trail.dtw_distance([0, 0], [1]) == 2.0
    assert trail.sim_trend([], []) == 1.0
    assert trail.sim_trend([1], []) == 0.0
    assert trail.sim_trend([0, 0], [1]) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        trail.dtw_distance([], [1])


def test_change_rate_and_latest():
    assert trail.change_rate(2, 3) == 0.5
    assert trail.change_rate(0, 4) == 4
    assert trail.change_rate(1, 1000) == 100
    assert trail.sim_latest(0.5, 0.5) == 1.0
    assert trail.sim_latest(0.0, 1.0) == pytest.approx(math.exp(-0.5))
    with pytest.raises(trail.ConfigError):
        trail.sim_latest(0, 1, sigma=0)


def test_metadata_embedding():
    e = trail.embed_text("Space opera sequel", 64)
    assert len(e) == 64
    assert sum(x * x for x in e) == pytest.approx(1.0)
    assert trail.embed_text("Space opera sequel", 64) == e
    assert trail.sim_meta(e, e) == pytest.approx(1.0)
    assert trail.sim_meta(e, trail.embed_text("", 64)) == 0.0


def test_sim_total_symmetric():
    a = trail.Sample("a", 4, [1, 2, 3], description_text="heist comedy", label=4)
    b = trail.Sample("b", 4, [3, 2, 1], description_text="heist drama", label=0)
    ab, ba = trail.sim_total(a, b), trail.sim_total(b, a)
    assert ab["total"] == ba["total"]
    assert 0.0 <= ab["total"] <= 1.0
    assert ab["total"] == pytest.approx(0.4 * ab["trend"] + 0.2 * ab["latest"] + 0.4 * ab["meta"])


def test_sample_json():
    s = trail.Sample("item_1", 3, [2, 5], first_window=1, description_text="x", label=7)
    assert s.sample_id == "item_1@3"
    assert json.loads(s.to_json())["label"] == 7


def test_mine_triplets():
    pool = [trail.Sample(f"s{i}", 5, [i, i + 1, i + 2], description_text=f"tag{i % 2}")
            for i in range(8)]
    triplets = trail.mine_triplets(pool, n_pos=2, batch_size=8)
    assert len(triplets) == 8
    for t in triplets:
        assert len(t["positives"]) == 2
        assert len(t["negatives"]) == 5
        assert t["anchor"] not in t["positives"] + t["negatives"]


def test_losses():
    assert trail.info_nce([1.0], [[1.0]], [], 0.1) == 0.0
    assert trail.info_nce([1.0], [[0.4]], [[0.4]], 0.7) == pytest.approx(math.log(2), abs=1e-12)
    assert trail.info_nce([1.0], [[1.0]], [[0.0]], 0.1) == pytest.approx(
        math.log1p(math.exp(-10)), abs=1e-12)
    assert trail.supervised_ce([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert trail.combined_loss(0.5, 0.3, 1) == pytest.approx(0.8)


def test_score_explain_rank():
    s = trail.Sample("film", 6, [7, 11, 14, 3, 2], description_text="Space opera sequel")
    assert trail.score("last_value", s) == 2
    assert trail.score("moving_average:w=2", s) == 2.5
    e = trail.explain(s, 2.0)
    assert "14" in e["trend"]
    assert e["text"].startswith("[Trend]: ")
    for tok in e["feature_tokens"]:
        assert tok in s.description_text
    cold = trail.explain(trail.Sample("new", 1, [], description_text="Quiet indie drama"), 0.0)
    assert "no historical popularity data" in cold["trend"]
    assert trail.rank_window({"a": 5, "b": 9, "c": 1}, 2) == ["b", "a"]
    assert trail.rank_window({"b": 5, "a": 5}, 2) == ["a", "b"]


def test_evaluate():
    r = trail.evaluate(["x", "a", "y"], {"u": {"a"}}, {"a": 3, "x": 1, "y": 0}, [1, 3])
    assert r["hr"][1] == 0.0
    assert r["hr"][3] == 1.0
    assert r["ndcg"][3] == pytest.approx(1 / math.log2(3))
    assert r["jaccard"][1] == 0.0
    assert r["users"] == 1
    with pytest.raises(ValueError):
        trail.evaluate(["a"], {"u": {"a"}}, {"a": 1}, [5])


def test_cli_end_to_end(tmp_path):
    code, _, err = trail.run_cli(["synth", "--dir", str(tmp_path / "corpus")])
    assert code == 0, err
    out = tmp_path / "out"
    code, _, err = trail.run_cli([
        "--set", f"interactions={tmp_path / 'corpus' / 'interactions.jsonl'}",
        "--set", f"metadata={tmp_path / 'corpus' / 'metadata.jsonl'}",
        "--set", "epochs=2",
        "--out", str(out), "run-all"])
    assert code == 0, err
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["hr"]["5"] == 1.0
    assert metrics["jaccard"]["5"] == 1.0
    code, _, err = trail.run_cli(["--out", str(out), "--set", "n_pos=0", "mine"])
    assert code == 2
    assert "n_pos" in err
