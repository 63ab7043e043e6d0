"""JSON interchange for measures, flows and plans."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .eulerian import FlowField
from .lagrangian import IrrigationPlan
from .measures import AtomicMeasure


def dumps(obj) -> str:
    # floats go through repr, so every value re-parses to the same double
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def load(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write(path, obj) -> str:
    text = dumps(obj)
    Path(path).write_text(text, encoding="utf-8")
    return text


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_measure(path, require_probability: bool = False) -> AtomicMeasure:
    return AtomicMeasure.from_dict(load(path), require_probability=require_probability)


def read_flow(path) -> FlowField:
    return FlowField.from_dict(load(path))


def read_plan(path) -> IrrigationPlan:
    return IrrigationPlan.from_dict(load(path))
