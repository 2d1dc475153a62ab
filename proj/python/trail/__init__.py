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
"""Popularity prediction toolkit with explainable rankings."""

from trail._core import (
    ConfigError,
    InputError,
    InvariantError,
    Sample,
    change_rate,
    combined_loss,
    dtw_distance,
    embed_text,
    evaluate,
    explain,
    info_nce,
    mine_triplets,
    rank_window,
    run_cli,
    score,
    sim_latest,
    sim_meta,
    sim_total,
    sim_trend,
    supervised_ce,
)

__all__ = [
    "ConfigError",
    "InputError",
    "InvariantError",
    "Sample",
    "change_rate",
    "combined_loss",
    "dtw_distance",
    "embed_text",
    "evaluate",
    "explain",
    "info_nce",
    "mine_triplets",
    "rank_window",
    "run_cli",
    "score",
    "sim_latest",
    "sim_meta",
    "sim_total",
    "sim_trend",
    "supervised_ce",
]
