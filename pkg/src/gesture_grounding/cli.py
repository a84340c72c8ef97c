"""Command line entry point: ``gground <command> ...``.

Exit status: 0 on success, 1 on a domain error (bad file, failed
resolution, invalid program), 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import GroundingError
from .gesture.classifier import GestureModels, TrainConfig, evaluate, mlp_train, rnn_train
from .gesture.dataset import generate_dataset, load_dataset
from .gesture.handfile import dumps_hand, load_hand
from .gesture.keypoints import DYNAMIC_CLASSES, STATIC_CLASSES, Description, GestureClass, Label
from .gesture.synth import synth_gesture
from .planner.backends import BACKEND_URL_ENV, RecordingBackend, RemoteBackend, complete, make_backend
from .planner.catalog import BASE_CATALOG, EXTENDED_CATALOG
from .planner.dsl import parse_policy, validate_policy
from .planner.instruction import Instruction, describe, textualize_instruction
from .planner.prompt import assemble_prompt, load_context
from .referent import resolve
from .scene import (DrawerGrid, RandomScene, SceneSpec, ToolBench, dumps_scene, generate_scene, load_ontology,
                    load_scene)
from .sim.gesture_instruct import HARNESS_FIDELITIES, load_cases, run_gesture_instruct
from .sim.interpreter import Perception, execute
from .sim.scenario import load_scenario, metrics_csv, run_batch, run_scenario
from .sim.sweep import SweepConfig, spacing_distance_sweep
from .sim.world import WorldState


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _point(text: str) -> tuple[float, float, float]:
    v = _floats(text)
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return v


def _gesture_class(text: str) -> GestureClass:
    try:
        return GestureClass.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _backend(args):
    return make_backend(args.backend, store=args.store, url=args.url, timeout=args.timeout)


# --- scene ------------------------------------------------------------------------

def cmd_scene_gen(args) -> int:
    if args.kind == "drawer-grid":
        kind = DrawerGrid(args.rows, args.cols, args.spacing, args.origin)
    elif args.kind == "tool-bench":
        if not args.labels or not args.positions or len(args.labels.split(",")) * 3 != len(args.positions):
            raise UsageError("--labels and --positions (x,y,z per label) are required for tool-bench")
        P = np.asarray(args.positions).reshape(-1, 3)
        kind = ToolBench(tuple(args.labels.split(",")), tuple(tuple(p) for p in P.tolist()))
    else:
        pool = tuple(args.labels.split(",")) if args.labels else ("cup", "bowl", "bottle", "block")
        kind = RandomScene(args.n, pool)
    _emit(dumps_scene(generate_scene(SceneSpec(kind, args.seed))), args.out)
    return 0


def cmd_scene_show(args) -> int:
    scene = load_scene(args.path)
    print(f"{len(scene.objects)} objects, {len(scene.cloud)} cloud points, frame {scene.frame_tag}")
    for o in scene.objects:
        x, y, z = o.position
        print(f"  {o.label:<20} {x:+.4f} {y:+.4f} {z:+.4f}")
    return 0


# --- gesture -----------------------------------------------------------------------

def cmd_gesture_synth(args) -> int:
    frames = synth_gesture(args.gesture_class, args.noise, args.frames, args.seed,
                           target=args.target, hand_position=args.hand_position)
    _emit(dumps_hand(frames), args.out)
    return 0


def _dataset(args, classes, n_default):
    if args.dataset:
        return load_dataset(args.dataset)
    return generate_dataset(classes, args.n_per_class or n_default, noise_sigma=args.noise, seed=args.seed)


def cmd_gesture_train(args) -> int:
    cfg = TrainConfig(learning_rate=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=args.seed)
    static = dynamic = None
    report = {}
    if args.kind in ("static", "both"):
        data = _dataset(args, STATIC_CLASSES, 500)
        static, curve = mlp_train(data, cfg)
        report["static"] = {"final_loss": curve[-1],
                            "test_accuracy": evaluate(GestureModels(static, None), data.test)["accuracy"]}
    if args.kind in ("dynamic", "both"):
        data = _dataset(args, DYNAMIC_CLASSES, 200)
        dynamic, curve = rnn_train(data, cfg)
        report["dynamic"] = {"final_loss": curve[-1],
                             "test_accuracy": evaluate(GestureModels(None, dynamic), data.test)["accuracy"]}
    GestureModels(static, dynamic).save(args.out)
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_gesture_eval(args) -> int:
    models = GestureModels.load(args.models)
    classes = STATIC_CLASSES if args.kind == "static" else DYNAMIC_CLASSES
    data = _dataset(args, classes, 100 if args.kind == "static" else 40)
    result = evaluate(models, data.test if len(data.test) else data)
    _emit(json.dumps(result, sort_keys=True, indent=1) + "\n", args.out)
    return 0


# --- grounding and planning ------------------------------------------------------------

def cmd_resolve(args) -> int:
    if args.mode != "direction" and not args.scene:
        raise UsageError("--scene is required unless --mode direction")
    if args.mode == "object" and not args.target:
        raise UsageError("--target is required in object mode")
    frames = load_hand(args.hand)
    hand = frames[(len(frames) - 1) // 2]
    scene = load_scene(args.scene) if args.mode != "direction" else None
    ref = resolve(scene, hand, args.mode, args.target, load_ontology(args.ontology))
    d = ref.to_dict()
    if d["kind"] == "object":
        x, y, z = d["position"]
        print(f"{d['label']} {x:.6f} {y:.6f} {z:.6f}")
    else:
        key = "vector" if d["kind"] == "direction" else "position"
        print(d["kind"], " ".join(f"{v:.6f}" for v in d[key]))
    return 0


def cmd_plan(args) -> int:
    catalog = EXTENDED_CATALOG if args.catalog == "extended" else BASE_CATALOG
    rep = None
    if args.gesture:
        if args.fidelity == "label":
            rep = Label(args.gesture)
        else:
            try:
                rep = Description(describe(GestureClass.parse(args.gesture)))
            except ValueError:
                rep = Description(args.gesture)
    block = textualize_instruction(Instruction(args.speech, (), rep), 0)
    prompt = assemble_prompt(load_context(args.context, catalog), block, situation=args.situation)
    text = complete(_backend(args), prompt)
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    program = parse_policy(text)
    problems = validate_policy(program, catalog)
    for v in problems:
        print(f"line {v.line}: {v.code}: {v.message}", file=sys.stderr)
    if problems:
        return 1
    if args.validate_only:
        print("# valid", file=sys.stderr)
        return 0
    if args.scene and args.hand:
        scene = load_scene(args.scene)
        frames = load_hand(args.hand)
        world = WorldState.from_scene(scene)
        world.human_hand = frames[(len(frames) - 1) // 2]
        perception = Perception(scene, world.human_hand, load_ontology(args.ontology), tuple(frames))
        result = execute(program, world, perception.bindings(), catalog)
        print(json.dumps({"trace": result.trace, "world": result.world.to_dict()}, sort_keys=True, indent=1))
    return 0


# --- scenarios and reports ------------------------------------------------------------

def _scenario_backend(args):
    return None if args.backend is None else _backend(args)


def cmd_run(args) -> int:
    m = run_scenario(load_scenario(args.scenario), backend=_scenario_backend(args))
    _emit(m.dumps(), args.out)
    if args.csv:
        Path(args.csv).write_text(metrics_csv([m]))
    if args.out:
        print(metrics_csv([m]), end="")
    return 0


def cmd_batch(args) -> int:
    if not Path(args.dir).is_dir():
        raise FileNotFoundError(f"no such directory: {args.dir}")
    rows = run_batch(args.dir, backend=_scenario_backend(args))
    _emit(metrics_csv(rows), args.out)
    if args.json:
        Path(args.json).write_text(json.dumps([m.to_dict() for m in rows], sort_keys=True, indent=1) + "\n")
    return 0


def cmd_sweep(args) -> int:
    cfg = SweepConfig(args.spacings, args.distances, args.sigma, args.trials, args.seed)
    result = spacing_distance_sweep(cfg)
    _emit(result.to_csv() if args.format == "csv" else result.dumps(), args.out)
    return 0


def cmd_gi_eval(args) -> int:
    cases = load_cases(args.cases)
    report = run_gesture_instruct(cases, _backend(args), args.fidelities)
    sys.stdout.write(report.table())
    if args.out:
        Path(args.out).write_text(report.dumps())
    return 0


def cmd_record(args) -> int:
    remote = RemoteBackend(args.url, args.timeout)
    remote.resolved_url()
    backend = RecordingBackend(remote, Path(args.store))
    if args.scenario:
        m = run_scenario(load_scenario(args.scenario), backend=backend)
        print(metrics_csv([m]), end="")
    else:
        cases = load_cases(None if args.cases == "builtin" else args.cases)
        report = run_gesture_instruct(cases, backend, args.fidelities)
        sys.stdout.write(report.table())
    return 0


def cmd_serve(args) -> int:
    from .service import GroundingService, ServiceConfig, make_server

    cfg = ServiceConfig(_backend(args), load_ontology(args.ontology), load_context(args.context),
                        scenes_dir=Path(args.scenes) if args.scenes else None)
    server = make_server(GroundingService(cfg), args.host, args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# --- parser ------------------------------------------------------------------------------

def _backend_flags(p, default: str | None = "rule") -> None:
    p.add_argument("--backend", choices=("rule", "replay", "remote"), default=default)
    p.add_argument("--store", help="transcript directory for the replay backend")
    p.add_argument("--url", help=f"completion endpoint (default: ${BACKEND_URL_ENV})")
    p.add_argument("--timeout", type=float, default=30.0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw")
    ap = argparse.ArgumentParser(prog="gground", description="Ground pointing gestures and plan robot programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    scene = sub.add_parser("scene", help="generate or inspect scenes").add_subparsers(dest="action", required=True)
    p = scene.add_parser("gen", parents=[common])
    p.add_argument("--kind", choices=("drawer-grid", "tool-bench", "random"), default="drawer-grid")
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--spacing", type=float, default=0.15)
    p.add_argument("--origin", type=_point, default=(0.0, 0.0, 2.0))
    p.add_argument("--labels")
    p.add_argument("--positions", type=_floats)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scene_gen)
    p = scene.add_parser("show", parents=[common])
    p.add_argument("path")
    p.set_defaults(func=cmd_scene_show)

    gesture = sub.add_parser("gesture", help="synthesize hands, train and evaluate classifiers")
    gsub = gesture.add_subparsers(dest="action", required=True)
    p = gsub.add_parser("synth", parents=[common])
    p.add_argument("--class", dest="gesture_class", type=_gesture_class, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--frames", type=int)
    p.add_argument("--target", type=_point)
    p.add_argument("--hand-position", type=_point)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gesture_synth)
    for name, func in (("train", cmd_gesture_train), ("eval", cmd_gesture_eval)):
        p = gsub.add_parser(name, parents=[common])
        p.add_argument("--kind", choices=("static", "dynamic", "both") if name == "train" else ("static", "dynamic"),
                       default="both" if name == "train" else "static")
        p.add_argument("--dataset", help="dataset file (JSONL); generated when omitted")
        p.add_argument("--n-per-class", type=int)
        p.add_argument("--noise", type=float, default=0.003)
        if name == "train":
            p.add_argument("--epochs", type=int, default=200)
            p.add_argument("--lr", type=float, default=1e-2)
            p.add_argument("--batch-size", type=int, default=32)
            p.add_argument("--out", required=True)
        else:
            p.add_argument("--models", required=True)
            p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("resolve", parents=[common], help="resolve a pointing referent")
    p.add_argument("--scene")
    p.add_argument("--hand", required=True)
    p.add_argument("--target")
    p.add_argument("--mode", choices=("object", "location", "direction"), default="object")
    p.add_argument("--ontology")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("plan", parents=[common], help="turn one instruction into a program")
    p.add_argument("--speech", required=True)
    p.add_argument("--gesture")
    p.add_argument("--fidelity", choices=("label", "description"), default="label")
    p.add_argument("--situation", help="optional context line for the prompt")
    p.add_argument("--context", help="prompt context file")
    p.add_argument("--catalog", choices=("base", "extended"), default="base")
    p.add_argument("--validate-only", action="store_true")
    p.add_argument("--scene")
    p.add_argument("--hand")
    p.add_argument("--ontology")
    _backend_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", parents=[common], help="run one scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--csv")
    _backend_flags(p, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", parents=[common], help="run every scenario in a directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--out")
    p.add_argument("--json")
    _backend_flags(p, default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("sweep", parents=[common], help="pointing accuracy over spacing and distance")
    p.add_argument("--spacings", type=_floats, default=(0.05, 0.15, 0.30))
    p.add_argument("--distances", type=_floats, default=(0.5, 1.0, 1.5))
    p.add_argument("--sigma", type=float, default=0.003)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gi-eval", parents=[common], help="score a planner on the instruction cases")
    p.add_argument("--cases")
    p.add_argument("--fidelities", type=lambda s: tuple(s.split(",")), default=HARNESS_FIDELITIES)
    p.add_argument("--out")
    _backend_flags(p)
    p.set_defaults(func=cmd_gi_eval)

    p = sub.add_parser("record", parents=[common], help="call the remote backend and save replies")
    p.add_argument("--store", required=True)
    p.add_argument("--url")
    p.add_argument("--timeout", type=float, default=30.0)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--scenario")
    group.add_argument("--cases", help="case file, or 'builtin' for the packaged cases")
    p.add_argument("--fidelities", type=lambda s: tuple(s.split(",")), default=HARNESS_FIDELITIES)
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("serve", parents=[common], help="serve /v1/resolve and /v1/plan")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--scenes", help="directory of scene files addressable by scene_ref")
    p.add_argument("--ontology")
    p.add_argument("--context")
    _backend_flags(p)
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (GroundingError, OSError, ValueError) as e:
        code = getattr(e, "code", type(e).__name__)
        print(f"gground: error: {code}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
