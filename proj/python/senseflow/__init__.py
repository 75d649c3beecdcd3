# Copyright 2026 The senseflow Authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the senseflow middleware core."""

import json

from ._senseflow import (
    Engine,
    SenseflowError,
    evaluate_rules,
    parse_csv,
    parse_json_lines,
    run_scenario,
    validate_request,
)


def inspect(engine, kind):
    return json.loads(engine.inspect_json(kind))


def plan_dump(engine, plan_id):
    return json.loads(engine.plan_dump_json(plan_id))


__all__ = [
    "Engine",
    "SenseflowError",
    "evaluate_rules",
    "inspect",
    "parse_csv",
    "parse_json_lines",
    "plan_dump",
    "run_scenario",
    "validate_request",
]
