# Copyright 2026 The latprune Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Latency-constrained structured pruning planner.

Specs, tables and plans are plain dicts here; they are serialized to JSON
on the way into the native core.
"""

import json

from latprune import _core
from latprune._core import (
    DEFAULT_SCALE,
    Error,
    InfeasibleError,
    lamp_scores,
    scale_to_int,
    solve_brute_force,
    solve_group_knapsack,
    structured_lamp_scores,
)

__all__ = [
    "DEFAULT_SCALE",
    "Error",
    "InfeasibleError",
    "build_table",
    "count_flops",
    "decode_tensors",
    "encode_tensors",
    "ingest_table",
    "lamp_scores",
    "plan",
    "scale_to_int",
    "score_network",
    "solve_brute_force",
    "solve_group_knapsack",
    "structured_lamp_scores",
    "verify",
]


def _dump(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def score_network(spec, weights):
    """Per-layer scores and ascending order, keyed by layer id."""
    return json.loads(_core.score_network(_dump(spec), weights))


def build_table(spec, cost_model, scale=DEFAULT_SCALE):
    return json.loads(_core.build_table(_dump(spec), _dump(cost_model), scale))


def ingest_table(spec, measured, scale=DEFAULT_SCALE):
    return json.loads(_core.ingest_table(_dump(spec), _dump(measured), scale))


def plan(spec, weights, table, *, target_latency=None, keep_ratio=None,
         remove_ratio=None, stages=1, scale=DEFAULT_SCALE):
    return json.loads(_core.plan(
        _dump(spec), weights, _dump(table), target_latency=target_latency,
        keep_ratio=keep_ratio, remove_ratio=remove_ratio, stages=stages,
        scale=scale))


def verify(spec, weights, table, plan_doc, *, oracle=False, scale=DEFAULT_SCALE):
    """Returns (name, passed, detail) for every check."""
    return _core.verify(_dump(spec), weights, _dump(table), _dump(plan_doc),
                        oracle=oracle, scale=scale)


def count_flops(spec, kept=None):
    return _core.count_flops(_dump(spec), kept or {})


def encode_tensors(tensors):
    """Packs {name: array of shape [out, in, kh, kw]} into SPLW bytes.

    Values may be numpy arrays or nested lists.
    """
    import numpy as np

    packed = []
    for name, array in tensors.items():
        flat = np.asarray(array, dtype=np.float32)
        shape, values = list(flat.shape), flat.ravel().tolist()
        if len(shape) != 4:
            raise ValueError(f"tensor '{name}' must have rank 4, got {len(shape)}")
        packed.append((name, shape, values))
    return _core.encode_tensors(packed)


def decode_tensors(data):
    """Returns {name: (shape, flat values)}."""
    return {name: (list(shape), values)
            for name, shape, values in _core.decode_tensors(data)}
