"""Command-line interface: sampling campaigns, verification, enumeration.

Every stochastic command requires --seed; identical invocations produce
byte-identical outputs. Exit codes: 0 ok (all gates passed for verify),
1 usage error, 2 runtime failure, 3 sampling budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, laws, peeling, rng as qrng, schaeffer, snake, trees
from .trees import RejectionBudgetExceeded, SizeTooLarge


def _config_from_file(path):
    """TOML-like key=value lines; values parsed as int/float/str."""
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        for cast in (int, float):
            try:
                out[key] = cast(val)
                break
            except ValueError:
                continue
        else:
            out[key] = val
    return out


def _manifest(path: Path, command: str, params: dict):
    payload = {"command": command, "version": __version__, "params": params}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _cmd_sample(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = qrng.stream(args.seed, args.stream)
    params = {k: v for k, v in vars(args).items()
              if k not in ("func", "json") and v is not None}
    kind = args.kind
    try:
        if kind == "quad":
            t = trees.sample_uniform_plane_tree(args.n, rng)
            lt = trees.sample_labels(t, "labeled", rng)
            q = schaeffer.tree_to_pointed_quad(lt, int(rng.integers(2)))
            (out / "map.rmap").write_bytes(q.to_bytes())
            (out / "map.json").write_text(q.to_json() + "\n")
        elif kind == "boltzmann":
            if args.route == "peeling":
                q, trace = peeling.run_boltzmann_peeling(rng, max_faces=args.max_faces)
                (out / "trace.jsonl").write_text(trace.to_jsonl())
            else:
                q = schaeffer.boltzmann_quad_via_trees(rng, max_edges=args.max_faces)
            (out / "map.rmap").write_bytes(q.to_bytes())
            (out / "map.json").write_text(q.to_json() + "\n")
        elif kind == "boundary_quad":
            bq = schaeffer.boltzmann_boundary_quad(
                args.k, rng, pointed=not args.unpointed, max_edges=args.max_faces)
            (out / "map.rmap").write_bytes(bq.map.to_bytes())
            (out / "map.json").write_text(bq.map.to_json() + "\n")
            params["outer_face"] = int(bq.outer_face)
        elif kind == "uipq_layers":
            if args.skeleton:
                offs, cdf = _pf().volume_tables()
                seeds = qrng.child_seeds(args.seed, 1, stream_id=args.stream)
                if args.boundary and args.boundary > 2:
                    r1, mn = _pf().p_ell_batch(seeds, args.boundary // 2, 10**9, 0)
                    (out / "trace.jsonl").write_text(json.dumps(
                        {"mode": "p_ell_skeleton", "R1": int(r1[0]), "minS": int(mn[0])}) + "\n")
                else:
                    st, H, V, steps = _pf().run_layers_batch(
                        seeds, True, args.radius, True, offs, cdf, 10**12)
                    lines = [json.dumps({"mode": "uipq_skeleton", "steps": int(steps[0])})]
                    for i in range(1, args.radius + 1):
                        lines.append(json.dumps({"layer": i, "H": H[0, i], "V": V[0, i]}))
                    (out / "trace.jsonl").write_text("\n".join(lines) + "\n")
            else:
                trace = peeling.peel_by_layers(
                    rng, mode="uipq", max_radius=args.radius,
                    boundary=args.boundary // 2 if args.boundary else None,
                    max_steps=10**8, fill_holes=False)
                (out / "trace.jsonl").write_text(trace.to_jsonl())
        elif kind == "snake":
            t = trees.sample_uniform_plane_tree(args.n, rng)
            lt = trees.sample_labels(t, "labeled", rng)
            s = snake.snake_from_labeled_tree(lt)
            (out / "snake.csv").write_text(s.to_csv())
            C, L = trees.contour_label_functions(lt)
            (out / "contour.csv").write_text(
                "k,C,L\n" + "\n".join(f"{i},{C[i]},{L[i]}" for i in range(len(C))) + "\n")
        else:
            print(f"unknown sample kind {kind!r}", file=sys.stderr)
            return 1
    except (SizeTooLarge, RejectionBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    _manifest(out / "manifest.json", f"sample {kind}", params)
    if args.json:
        print(json.dumps({"out": str(out), "kind": kind, "seed": args.seed}))
    else:
        print(f"wrote {kind} sample to {out}/")
    return 0


def _pf():
    from . import _peelfast
    return _peelfast


def _cmd_verify(args) -> int:
    ids = experiments.all_experiment_ids() if args.experiment == "all" else [args.experiment]
    for e in ids:
        if e not in experiments.EXPERIMENTS:
            known = ", ".join(experiments.all_experiment_ids())
            print(f"unknown experiment {e!r}; known: {known}", file=sys.stderr)
            return 1
    config = _config_from_file(args.config) if args.config else {}
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    all_ok = True
    for e in ids:
        rep = experiments.run_experiment(e, args.seed, config, quick=args.quick)
        all_ok = all_ok and rep.passed
        blob = json.loads(rep.to_json())
        blob.pop("elapsed_seconds", None)  # keep files bit-reproducible
        text = json.dumps(blob, sort_keys=True, indent=2) + "\n"
        if out:
            (out / f"{e}.json").write_text(text)
        if args.json:
            print(text, end="")
        else:
            status = "PASS" if rep.passed else "FAIL"
            print(f"[{status}] {e} ({rep.elapsed:.1f}s)")
            for name, g in rep.gates.items():
                mark = "ok " if g["passed"] else "BAD"
                print(f"    {mark} {name}: {g['value']}  [{g['requirement']}]")
    return 0 if all_ok else 2


def _cmd_enumerate(args) -> int:
    n = args.n
    rows = []
    try:
        if args.kind == "quads":
            if n > 5:
                raise SizeTooLarge("enumeration capped at n = 5")
            keys = set()
            for lt in trees.enumerate_labeled_trees(n):
                for eps in (0, 1):
                    keys.add(schaeffer.tree_to_pointed_quad(lt, eps).canonical_key())
            rows.append(("pointed quadrangulations", len(keys),
                         laws.n_pointed_quadrangulations(n)))
        elif args.kind == "labeled-trees":
            rows.append(("labeled trees", len(trees.enumerate_labeled_trees(n)),
                         laws.n_labeled_trees(n)))
        elif args.kind == "bridges":
            rows.append(("bridges", len(trees.enumerate_bridges(n)), laws.n_bridges(n)))
        else:
            print(f"unknown enumeration kind {args.kind!r}", file=sys.stderr)
            return 1
    except SizeTooLarge as exc:
        print(f"size too large: {exc}", file=sys.stderr)
        return 1
    for name, got, want in rows:
        if args.json:
            print(json.dumps({"kind": name, "n": n, "enumerated": got, "formula": want}))
        else:
            print(f"{name} at n={n}: enumerated {got}, formula {want}"
                  + ("" if got == want else "  MISMATCH"))
    return 0 if all(g == w for _, g, w in rows) else 2


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="quadlab",
                                 description="random planar quadrangulation laboratory")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw objects and write them to files")
    sp.add_argument("kind", choices=["quad", "boltzmann", "boundary_quad",
                                     "uipq_layers", "snake"])
    sp.add_argument("--n", type=int, default=50, help="size parameter (faces/edges)")
    sp.add_argument("--k", type=int, default=2, help="boundary half-perimeter")
    sp.add_argument("--radius", type=int, default=10)
    sp.add_argument("--boundary", type=int, default=0, help="starting perimeter (uipq_layers)")
    sp.add_argument("--route", choices=["trees", "peeling"], default="trees")
    sp.add_argument("--unpointed", action="store_true")
    sp.add_argument("--skeleton", action="store_true", help="count-level fast path")
    sp.add_argument("--max-faces", dest="max_faces", type=int, default=10**6)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--stream", type=int, default=0)
    sp.add_argument("--out", default="quadlab-out")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=_cmd_sample)

    vp = sub.add_parser("verify", help="run a registered experiment")
    vp.add_argument("experiment")
    vp.add_argument("--seed", type=int, required=True)
    vp.add_argument("--quick", action="store_true", help="reduced sizes, non-binding")
    vp.add_argument("--config", help="key=value config file")
    vp.add_argument("--out", help="directory for report JSON files")
    vp.add_argument("--json", action="store_true")
    vp.set_defaults(func=_cmd_verify)

    ep = sub.add_parser("enumerate", help="exhaustive counts vs closed forms")
    ep.add_argument("kind", choices=["quads", "labeled-trees", "bridges"])
    ep.add_argument("n", type=int)
    ep.add_argument("--json", action="store_true")
    ep.set_defaults(func=_cmd_enumerate)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except (SizeTooLarge, RejectionBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # runtime failures map to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
