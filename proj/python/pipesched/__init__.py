# Copyright 2026 The pipesched Authors.
#
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

"""Pipeline-parallel schedule generation and simulation across datacenters.

Problems, schedules and timelines are plain dicts in the same layout as the
JSON files the command-line tool reads and writes.
"""

import json as _json

from . import _pipesched as _core
from ._pipesched import (
    DeadlockError,
    InfeasibleError,
    LinkOccupancy,
    ParseError,
    UnsupportedError,
    ValidationError,
    gBps_to_beta,
    gbps_to_beta,
    message_size,
    preset,
    preset_names,
)

__all__ = [
    "DeadlockError",
    "InfeasibleError",
    "LinkOccupancy",
    "ParseError",
    "UnsupportedError",
    "ValidationError",
    "bubble_stride",
    "delay_sweep",
    "exact_value",
    "family_names",
    "gBps_to_beta",
    "gantt_svg",
    "gbps_to_beta",
    "generate",
    "lp_text",
    "message_size",
    "normalize_problem",
    "pp_vs_dp",
    "preset",
    "preset_names",
    "rechunk",
    "simulate",
    "uniform_problem",
    "validate_schedule",
]


def _dump(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def uniform_problem(**options):
    """Homogeneous problem; keyword names follow the problem file fields."""
    return _json.loads(_core.uniform_problem(**options))


def normalize_problem(problem):
    """Validates a problem and expands scalar shorthands."""
    return _json.loads(_core.normalize_problem(_dump(problem)))


def rechunk(problem, pattern, n_chunks=2):
    return _json.loads(_core.rechunk(_dump(problem), pattern, n_chunks))


def family_names():
    return list(_core.family_names())


def generate(problem, family, **options):
    """Returns (schedule, timeline, optimal) for a schedule family."""
    schedule, timeline, optimal = _core.generate(_dump(problem), family, **options)
    return _json.loads(schedule), _json.loads(timeline), optimal


def simulate(problem, schedule):
    return _json.loads(_core.simulate(_dump(problem), _dump(schedule)))


def validate_schedule(problem, schedule):
    """List of violations; empty when the schedule is valid."""
    return _core.validate_schedule(_dump(problem), _dump(schedule))


def gantt_svg(timeline):
    return _core.gantt_svg(_dump(timeline))


def lp_text(problem, n_sub=0, objective="span"):
    return _core.lp_text(_dump(problem), n_sub, objective)


def exact_value(problem, objective="span", gap=0.0, max_nodes=-1):
    """(primary, secondary, optimal) objective values of the exact solver."""
    return _core.exact_value(_dump(problem), objective, gap, max_nodes)


def delay_sweep(config, base_dir=""):
    return _core.delay_sweep(_dump(config), str(base_dir))


def pp_vs_dp(config=None):
    if config is None:
        config = {"format": "pipesched-ppdp", "version": 1}
    return _core.pp_vs_dp(_dump(config))


def bubble_stride(problem, family, latencies):
    """(points, slopes) of a static family under growing cross-DC latency."""
    points, slopes = _core.bubble_stride(_dump(problem), family, list(latencies))
    return points, list(slopes)
