"""Command-line pipeline: mesh -> panels -> cycle -> stacking -> geometry.

Exit status 0 on success, 1 on a domain error (printed as
``error[<code>]: <message>``), 2 on a usage error.
"""

import argparse
import os
import sys

from .errors import KirigamiError, SchemaError
from .fold_kinematics import (
    angles_for_placement,
    folded_configuration,
    interpolate_configuration,
    strip_fk,
    thick_geometry,
)
from .mesh_io import parse_mesh, snapshot_from_slabs, write_geometry
from .planfile import (
    PlanFile,
    TransformFile,
    dumps,
    loads,
    doc_to_plan,
    serialize_plan,
    serialize_transform,
)
from .stacker import compactness_metrics, search_compactest
from .stripifier import SolverConfig, find_hamiltonian_cycle
from .transformer import common_stacking, hinge_diff, verify_transform
from .voxel_surface import build_panel_network, network_from_mesh

BUDGET_ENV = "KIRIGAMI_BUDGET"
DEFAULT_BUDGET = 64


def _default_budget():
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return max(0, int(raw))
    except ValueError:
        return DEFAULT_BUDGET


def _write(data, out):
    if out in (None, "-"):
        sys.stdout.write(data.decode("utf-8") if isinstance(data, bytes) else data)
    else:
        with open(out, "wb") as fh:
            fh.write(data if isinstance(data, bytes) else data.encode("utf-8"))


def _looks_like_json(path):
    with open(path, "rb") as fh:
        return fh.read(64).lstrip().startswith(b"{")


def _load_input(path, args):
    """PlanFile from a JSON document, or a fresh network from a mesh file."""
    if _looks_like_json(path):
        with open(path, "rb") as fh:
            pf = doc_to_plan(loads(fh.read()))
        t = getattr(args, "thickness", None)
        if t is not None and abs(t * pf.network.l - pf.network.t) > 1e-12:
            net = build_panel_network(pf.network.faces(), l=pf.network.l, t=t * pf.network.l,
                                      origin=pf.network.origin)
            pf = PlanFile(net, pf.params, pf.cycle, pf.break_index, pf.plan)
        return pf
    mesh = parse_mesh(path)
    res = getattr(args, "resolution", None) or 16
    t = getattr(args, "thickness", None) or 0.1
    net, _ = network_from_mesh(mesh, res, thickness=t)
    params = {"resolution": res, "mesh_bbox": [float(x) for x in mesh.bbox]}
    return PlanFile(net, params)


def _ensure_cycle(pf, seed):
    if pf.cycle is not None:
        return pf
    cycle = find_hamiltonian_cycle(pf.network, SolverConfig(seed=seed))
    return PlanFile(pf.network, {**pf.params, "seed": seed}, cycle)


def cmd_voxelize(args):
    mesh = parse_mesh(args.mesh)
    net, grid = network_from_mesh(mesh, args.resolution, thickness=args.thickness)
    pf = PlanFile(net, {"resolution": args.resolution, "mesh_bbox": [float(x) for x in mesh.bbox]})
    _write(serialize_plan(pf), args.output)
    return 0


def cmd_stripify(args):
    pf = _load_input(args.input, args)
    pf = _ensure_cycle(PlanFile(pf.network, pf.params), args.seed)
    _write(serialize_plan(pf), args.output)
    return 0


def cmd_stack(args):
    pf = _ensure_cycle(_load_input(args.input, args), args.seed)
    bbox = pf.params.get("mesh_bbox")
    result = search_compactest(
        pf.cycle, pf.network,
        k_candidates=args.piles,
        m=args.nonuniform_m,
        nonuniform_budget=args.budget,
        seed=args.seed,
        mesh_bbox=tuple(bbox) if bbox else None,
    )
    out = PlanFile(pf.network, pf.params, pf.cycle, result.strip.break_index, result.plan)
    _write(serialize_plan(out), args.output)
    return 0


def _require_plan(pf, path):
    if pf.plan is None:
        raise SchemaError("plan", f"{path} holds no stacking plan (run 'stack' first)")


def cmd_simulate(args):
    with open(args.plan, "rb") as fh:
        pf = doc_to_plan(loads(fh.read()))
    _require_plan(pf, args.plan)
    if not 0.0 <= args.s <= 1.0:
        return _usage_error("simulate", "--s must lie in [0, 1]")
    net = pf.network
    strip = pf.strip()
    start = folded_configuration(strip, net.t, net.l)
    end = angles_for_placement(strip, pf.placement(), net.t, net.l)
    config = interpolate_configuration(start, end, args.s)
    slabs = thick_geometry(strip_fk(strip, config))
    write_geometry(snapshot_from_slabs(slabs, connectors=not args.no_connectors), args.output)
    return 0


def cmd_transform(args):
    plans = []
    for path in (args.plan_a, args.plan_b):
        with open(path, "rb") as fh:
            plans.append(doc_to_plan(loads(fh.read())))
    cs = common_stacking([p.network for p in plans], footprint=args.footprint, seed=args.seed,
                         budget=max(1, args.budget // 8))
    diff = hinge_diff(cs, 0, 1)
    rep = verify_transform(cs, 0, 1)
    tf = TransformFile(cs.footprint, cs.shape, diff.disconnect, diff.connect,
                       len(plans[0].network), rep.ok, rep.message)
    _write(serialize_transform(tf), args.output)
    return 0 if rep.ok else 1


def cmd_report(args):
    with open(args.plan, "rb") as fh:
        pf = doc_to_plan(loads(fh.read()))
    _require_plan(pf, args.plan)
    bbox = pf.params.get("mesh_bbox")
    rep = compactness_metrics(pf.placement(), pf.network, tuple(bbox) if bbox else None)
    doc = {
        "sum_dims": rep.sum_dims,
        "CR": rep.CR,
        "volume_ratio": rep.volume_ratio,
        "footprint": list(rep.footprint),
        "height_levels": rep.height_levels,
        "dims": [rep.W_s, rep.D_s, rep.H_s],
        "piles": list(pf.plan.pile_heights),
        "break_index": pf.break_index,
    }
    _write(dumps(doc), args.output)
    return 0


def _usage_error(cmd, message):
    sys.stderr.write(f"kirigami-stack {cmd}: error: {message}\n")
    return 2


def build_parser():
    parser = argparse.ArgumentParser(prog="kirigami-stack",
                                     description="Fold voxelized meshes into compact stacked kirigami strips.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("voxelize", help="mesh -> panel network")
    p.add_argument("mesh")
    p.add_argument("--resolution", type=int, default=16, help="cells along the longest bbox side")
    p.add_argument("--thickness", type=float, default=0.1, help="panel thickness as a fraction of l")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("stripify", help="panel network (or mesh) -> Hamiltonian cycle")
    p.add_argument("input")
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--thickness", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stripify)

    p = sub.add_parser("stack", help="cycle -> compactest stacking plan")
    p.add_argument("input")
    p.add_argument("--piles", type=int, nargs="+", default=None, help="pile counts to try")
    p.add_argument("--nonuniform-m", type=int, default=0, help="largest height change for non-uniform plans")
    p.add_argument("--thickness", type=float, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None,
                   help=f"non-uniform plans sampled per pile count (env {BUDGET_ENV})")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stack)

    p = sub.add_parser("simulate", help="plan + s -> OBJ of slabs between folded (0) and stacked (1)")
    p.add_argument("plan")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--no-connectors", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("transform", help="two plans -> hinge rewiring between their common stack")
    p.add_argument("plan_a")
    p.add_argument("plan_b")
    p.add_argument("--footprint", type=int, nargs=2, default=None, metavar=("P", "Q"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("report", help="plan -> compactness report")
    p.add_argument("plan")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    """Run the CLI and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "budget", 0) is None:
        args.budget = _default_budget()
    try:
        return args.func(args)
    except KirigamiError as exc:
        sys.stderr.write(f"error[{exc.code}]: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error[E_IO]: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
