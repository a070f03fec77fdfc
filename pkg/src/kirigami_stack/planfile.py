"""Canonical JSON files for panel networks, cycles, stacking plans and transforms.

Output is byte-stable: keys are sorted and floats are rounded to 9
significant digits before encoding, so parsing a file and writing it back
reproduces it exactly. Readers reject unknown fields.
"""

from dataclasses import dataclass
import json
import math

import numpy as np

from .errors import KirigamiError, SchemaError
from .fold_kinematics import angles_for_placement, folded_configuration
from .stacker import StackPlan, break_cycle, stack_forward_kinematics
from .stripifier import StripCycle, validate_cycle
from .voxel_surface import build_panel_network

NETWORK_KIND = "kirigami-network/1"
CYCLE_KIND = "kirigami-cycle/1"
PLAN_KIND = "kirigami-plan/1"
TRANSFORM_KIND = "kirigami-transform/1"
KINDS = (NETWORK_KIND, CYCLE_KIND, PLAN_KIND, TRANSFORM_KIND)

_PARAM_FIELDS = {"l", "t", "resolution", "seed", "mesh_bbox"}


@dataclass(frozen=True, eq=False)
class PlanFile:
    """A network, optionally with its cycle, and optionally a stacking of it."""

    network: object
    params: dict
    cycle: object = None
    break_index: int = None
    plan: object = None

    @property
    def kind(self):
        if self.plan is not None:
            return PLAN_KIND
        if self.cycle is not None:
            return CYCLE_KIND
        return NETWORK_KIND

    def strip(self):
        return break_cycle(self.cycle, self.break_index)

    def placement(self):
        return stack_forward_kinematics(self.strip(), self.plan)


def round_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot store non-finite value {x}")
    r = float(f"{x:.9g}")
    return 0.0 if r == 0 else r


def _canon(obj):
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_float(obj)
    if isinstance(obj, np.ndarray):
        return _canon(obj.tolist())
    return obj


def dumps(doc):
    return (json.dumps(_canon(doc), sort_keys=True, indent=1) + "\n").encode("utf-8")


def _params_doc(params):
    p = {"l": 1.0, "t": 0.1, "resolution": None, "seed": 0, "mesh_bbox": None}
    p.update(params)
    unknown = set(p) - _PARAM_FIELDS
    if unknown:
        raise SchemaError(f"params.{sorted(unknown)[0]}", "unknown field")
    return p


def plan_to_doc(pf):
    net = pf.network
    doc = {
        "kind": pf.kind,
        "params": _params_doc({**pf.params, "l": net.l, "t": net.t}),
        "origin": list(net.origin),
        "panels": [[*p.voxel, p.face_dir] for p in net.panels],
    }
    if pf.cycle is not None:
        doc["cycle"] = {"order": list(pf.cycle.order), "hinges": list(pf.cycle.hinges)}
    if pf.plan is not None:
        strip = pf.strip()
        placement = stack_forward_kinematics(strip, pf.plan)
        doc["break_index"] = pf.break_index
        doc["plan"] = {"kind": pf.plan.kind, "pile_heights": list(pf.plan.pile_heights),
                       "delta": pf.plan.delta}
        doc["placement"] = {
            "cells": placement.cells.tolist(),
            "levels": placement.levels.tolist(),
            "face_up": placement.face_up.tolist(),
        }
        doc["angles"] = {
            "folded": folded_configuration(strip, net.t, net.l).angles.tolist(),
            "stacked": angles_for_placement(strip, placement, net.t, net.l).angles.tolist(),
        }
    return doc


def serialize_plan(pf):
    return dumps(plan_to_doc(pf))


# ---- reading ----------------------------------------------------------------

def _expect(cond, path, message):
    if not cond:
        raise SchemaError(path, message)


def _fields(obj, path, required, optional=()):
    _expect(isinstance(obj, dict), path or "<root>", "expected an object")
    for key in obj:
        if key not in required and key not in optional:
            raise SchemaError(f"{path}.{key}" if path else key,
                              "unknown field (this reader understands " + ", ".join(KINDS) + ")")
    for key in required:
        _expect(key in obj, f"{path}.{key}" if path else key, "missing field")


def _int_list(v, path, length=None):
    _expect(isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v),
            path, "expected a list of integers")
    if length is not None:
        _expect(len(v) == length, path, f"expected {length} entries, got {len(v)}")
    return v


def _num(v, path):
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), path, "expected a number")
    return float(v)


def _num_list(v, path, length=None):
    _expect(isinstance(v, list), path, "expected a list of numbers")
    out = [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]
    if length is not None:
        _expect(len(out) == length, path, f"expected {length} entries, got {len(out)}")
    return out


def loads(data):
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError("<root>", f"not valid JSON: {exc}") from None
    _expect(isinstance(doc, dict), "<root>", "expected an object")
    _expect(doc.get("kind") in KINDS, "kind", f"expected one of {', '.join(KINDS)}")
    return doc


def _read_params(v):
    _fields(v, "params", ("l", "t", "resolution", "seed", "mesh_bbox"))
    l, t = _num(v["l"], "params.l"), _num(v["t"], "params.t")
    _expect(l > 0, "params.l", "must be positive")
    _expect(0 < t < l / 2, "params.t", "must satisfy 0 < t < l/2")
    _expect(v["resolution"] is None or isinstance(v["resolution"], int), "params.resolution",
            "expected an integer or null")
    _expect(isinstance(v["seed"], int), "params.seed", "expected an integer")
    if v["mesh_bbox"] is not None:
        _num_list(v["mesh_bbox"], "params.mesh_bbox", 3)
    return dict(v)


def doc_to_plan(doc):
    kind = doc["kind"]
    base = ("kind", "params", "origin", "panels")
    if kind == NETWORK_KIND:
        _fields(doc, "", base)
    elif kind == CYCLE_KIND:
        _fields(doc, "", base + ("cycle",))
    elif kind == PLAN_KIND:
        _fields(doc, "", base + ("cycle", "break_index", "plan", "placement", "angles"))
    else:
        raise SchemaError("kind", f"{kind} is not a panel-network document")
    params = _read_params(doc["params"])
    origin = _num_list(doc["origin"], "origin", 3)
    _expect(isinstance(doc["panels"], list) and doc["panels"], "panels", "expected a non-empty list")
    faces = []
    for i, row in enumerate(doc["panels"]):
        _int_list(row, f"panels[{i}]", 4)
        _expect(0 <= row[3] < 6, f"panels[{i}][3]", "face direction must be 0..5")
        faces.append((tuple(row[:3]), row[3]))
    try:
        network = build_panel_network(faces, l=params["l"], t=params["t"], origin=origin)
    except KirigamiError as exc:
        raise SchemaError("panels", f"not a valid panel network: {exc}") from None
    _expect(network.faces() == faces, "panels", "panels must be listed in sorted (voxel, face) order")
    n = len(network)
    if kind == NETWORK_KIND:
        return PlanFile(network, params)

    cyc = doc["cycle"]
    _fields(cyc, "cycle", ("order", "hinges"))
    order = _int_list(cyc["order"], "cycle.order", n)
    hinges = _int_list(cyc["hinges"], "cycle.hinges", n)
    for i, p in enumerate(order):
        _expect(0 <= p < n, f"cycle.order[{i}]", f"panel id {p} does not exist")
    _expect(len(set(order)) == n, "cycle.order", "panel ids repeat")
    try:
        cycle = StripCycle.from_order(order, network)
    except KeyError as exc:
        raise SchemaError("cycle.order", str(exc)) from None
    _expect(list(cycle.hinges) == hinges, "cycle.hinges", "hinge edges do not match the panel order")
    bad = validate_cycle(cycle, network)
    _expect(bad is None, "cycle", str(bad))
    if kind == CYCLE_KIND:
        return PlanFile(network, params, cycle)

    b = doc["break_index"]
    _expect(isinstance(b, int) and 0 <= b < n, "break_index", f"expected an integer in 0..{n - 1}")
    pd = doc["plan"]
    _fields(pd, "plan", ("kind", "pile_heights", "delta"))
    _expect(pd["kind"] in ("uniform", "nonuniform"), "plan.kind", "expected uniform or nonuniform")
    heights = _int_list(pd["pile_heights"], "plan.pile_heights")
    _expect(heights and min(heights) >= 1 and sum(heights) == n, "plan.pile_heights",
            f"expected positive heights summing to {n}")
    _expect(isinstance(pd["delta"], int) and pd["delta"] >= 0, "plan.delta", "expected a non-negative integer")
    plan = StackPlan(pd["kind"], tuple(heights), pd["delta"])
    pf = PlanFile(network, params, cycle, b, plan)
    try:
        placement = pf.placement()
    except KirigamiError as exc:
        raise SchemaError("plan", f"plan cannot be stacked: {exc}") from None

    pl = doc["placement"]
    _fields(pl, "placement", ("cells", "levels", "face_up"))
    _expect(isinstance(pl["cells"], list) and len(pl["cells"]) == n, "placement.cells", f"expected {n} entries")
    for i, c in enumerate(pl["cells"]):
        _int_list(c, f"placement.cells[{i}]", 2)
    _int_list(pl["levels"], "placement.levels", n)
    _expect(isinstance(pl["face_up"], list) and len(pl["face_up"]) == n
            and all(isinstance(x, bool) for x in pl["face_up"]), "placement.face_up",
            f"expected {n} booleans")
    _expect(pl["cells"] == placement.cells.tolist(), "placement.cells", "does not match the plan")
    _expect(pl["levels"] == placement.levels.tolist(), "placement.levels", "does not match the plan")
    _expect(pl["face_up"] == placement.face_up.tolist(), "placement.face_up", "does not match the plan")

    an = doc["angles"]
    _fields(an, "angles", ("folded", "stacked"))
    for key in ("folded", "stacked"):
        vals = _num_list(an[key], f"angles.{key}", n - 1)
        _expect(all(abs(a) <= math.pi + 1e-9 for a in vals), f"angles.{key}", "angles must lie in [-pi, pi]")
    return pf


def parse_plan(data):
    return doc_to_plan(loads(data))


@dataclass(frozen=True)
class TransformFile:
    footprint: tuple
    shape: tuple
    disconnect: tuple
    connect: tuple
    n_panels: int
    verified: bool
    message: str


def _conn_doc(c):
    a, b, side = c
    return [list(a), list(b), side]


def serialize_transform(tf):
    return dumps({
        "kind": TRANSFORM_KIND,
        "footprint": list(tf.footprint),
        "shape": [list(s) for s in tf.shape],
        "disconnect": [_conn_doc(c) for c in tf.disconnect],
        "connect": [_conn_doc(c) for c in tf.connect],
        "n_panels": tf.n_panels,
        "verified": tf.verified,
        "message": tf.message,
    })


def parse_transform(data):
    doc = loads(data)
    _expect(doc["kind"] == TRANSFORM_KIND, "kind", f"expected {TRANSFORM_KIND}")
    _fields(doc, "", ("kind", "footprint", "shape", "disconnect", "connect", "n_panels", "verified", "message"))
    fp = tuple(_int_list(doc["footprint"], "footprint", 2))
    shape = tuple(tuple(_int_list(s, f"shape[{i}]", 3)) for i, s in enumerate(doc["shape"]))
    conns = {}
    for key in ("disconnect", "connect"):
        out = []
        for i, c in enumerate(doc[key]):
            path = f"{key}[{i}]"
            _expect(isinstance(c, list) and len(c) == 3, path, "expected [slot, slot, side]")
            a = tuple(_int_list(c[0], path + "[0]", 3))
            b = tuple(_int_list(c[1], path + "[1]", 3))
            _expect(isinstance(c[2], int) and 0 <= c[2] < 4, path + "[2]", "side must be 0..3")
            out.append((a, b, c[2]))
        conns[key] = tuple(out)
    _expect(isinstance(doc["n_panels"], int), "n_panels", "expected an integer")
    _expect(isinstance(doc["verified"], bool), "verified", "expected a boolean")
    _expect(isinstance(doc["message"], str), "message", "expected a string")
    return TransformFile(fp, shape, conns["disconnect"], conns["connect"], doc["n_panels"],
                         doc["verified"], doc["message"])
