"""Command-line workflows: track, eval, synth, project, plot.

Machine-readable summaries go to standard output as JSON; diagnostics go to
standard error. The exit status is 0 only when the workflow completed.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from . import io as rio
from . import synth
from .errors import RLMError
from .metrics import evaluate
from .tracker import Tracker, TrackerConfig, run_sequence

log = logging.getLogger("rlmtrack")

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


class CLIError(RLMError):
    """A user-facing failure with a message and no traceback."""


def _read(path, what):
    p = Path(path)
    if not p.is_file():
        raise CLIError(f"{what} file not found: {p}")
    return rio.read_text(p)


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- track ---------------------------------------------------------------------


def build_config(args):
    cfg = TrackerConfig()
    if args.config:
        try:
            cfg = TrackerConfig.from_dict(json.loads(_read(args.config, "config")))
        except json.JSONDecodeError as exc:
            raise CLIError(f"config {args.config}: invalid JSON ({exc})") from None
    return cfg.ablated(
        density_modulation=not args.no_density_modulation,
        rlm=not args.no_rlm,
        threshold_mode=args.threshold_mode,
    )


def _track_one(job):
    dets_path, out_path, cam_text, affine_text, cfg_dict = job
    cam = rio.parse_camera_config(cam_text)
    cfg = TrackerConfig.from_dict(cfg_dict)
    dets = rio.parse_mot_dets(_read(dets_path, "detections"))
    affines = rio.parse_affine_file(affine_text) if affine_text is not None else None
    trk = Tracker(cam, cfg)
    rows = run_sequence(cam, dets, affines, cfg, tracker=trk)
    rio.write_text(out_path, rio.write_mot_results(rows))
    summary = trk.stats.as_dict()
    summary.update(dets=str(dets_path), out=str(out_path), tracks=len({r.id for r in rows}))
    return summary


def cmd_track(args):
    cam_text = _read(args.camera, "camera")
    rio.parse_camera_config(cam_text)  # fail fast before any work
    affine_text = _read(args.affines, "affine") if args.affines else None
    cfg = build_config(args)
    if len(args.dets) == 1 and not Path(args.out).is_dir():
        outs = [Path(args.out)]
    else:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        outs = [out_dir / Path(d).name for d in args.dets]
    for d in args.dets:
        _read(d, "detections")
    jobs = [(d, o, cam_text, affine_text, cfg.to_dict()) for d, o in zip(args.dets, outs)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            runs = list(ex.map(_track_one, jobs))
    else:
        runs = [_track_one(j) for j in jobs]
    ablation = {
        "no_density_modulation": args.no_density_modulation,
        "no_rlm": args.no_rlm,
        "threshold_mode": cfg.density.modulation_mode.value,
    }
    _emit({"command": "track", "ablation": ablation, "config": cfg.to_dict(), "runs": runs})


# -- eval ----------------------------------------------------------------------


def cmd_eval(args):
    gt = rio.parse_mot_rows(_read(args.gt, "ground-truth"), gt=True)
    hyp = rio.parse_mot_rows(_read(args.results, "results"))
    report = evaluate(gt, hyp, args.iou)
    print(report.table(), file=sys.stderr)
    out = report.as_dict()
    out.update(command="eval", gt=str(args.gt), results=str(args.results))
    _emit(out)


# -- synth ---------------------------------------------------------------------


def load_scenario(text):
    """Scenario from JSON: either ``{"preset": name, "seed": k}`` or an explicit scenario."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CLIError(f"scenario: invalid JSON ({exc})") from None
    if "preset" in d:
        name = d["preset"]
        if name not in synth.PRESETS:
            raise CLIError(f"unknown preset {name!r}; choose from {sorted(synth.PRESETS)}")
        return synth.PRESETS[name](seed=int(d.get("seed", 0)))
    try:
        cam = synth.DEFAULT_CAMERA
        if "camera" in d:
            cam = geo.CameraModel(**{rio.CAMERA_KEYS.get(k, k): v for k, v in d["camera"].items()})
        agents = [
            synth.Agent(tuple(a["start"]), tuple(a["velocity"]), a.get("width", 0.5), a.get("height", 1.7))
            for a in d["agents"]
        ]
        extra = {k: d[k] for k in ("occlusion_iou", "occluded_score", "base_score", "jitter_px", "seed") if k in d}
        return synth.ScenarioSpec(cam, agents, int(d["n_frames"]), **extra)
    except (KeyError, TypeError) as exc:
        raise CLIError(f"scenario: missing or malformed field {exc}") from None


def cmd_synth(args):
    if args.spec:
        spec = load_scenario(_read(args.spec, "scenario"))
    else:
        spec = synth.PRESETS[args.preset](seed=args.seed)
    gt, dets = synth.generate(spec)
    rio.write_text(args.gt, rio.write_gt_rows(gt))
    rio.write_text(args.dets, rio.write_mot_dets(dets))
    if args.camera_out:
        rio.write_text(args.camera_out, rio.format_camera_config(spec.camera))
    _emit(
        {
            "command": "synth",
            "frames": spec.n_frames,
            "agents": len(spec.agents),
            "gt_rows": len(gt),
            "det_rows": len(dets),
            "occluded_frames": synth.occluded_frames(spec),
            "seed": spec.seed,
        }
    )


# -- project -------------------------------------------------------------------


def cmd_project(args):
    cam = rio.parse_camera_config(_read(args.camera, "camera"))
    if args.inverse:
        x, y = geo.unmap_point(cam, args.x, args.y)
        _emit({"command": "project", "map": [args.x, args.y], "pixel": [float(x), float(y)]})
    else:
        mx, my = geo.map_point(cam, args.x, args.y)
        _emit({"command": "project", "pixel": [args.x, args.y], "map": [float(mx), float(my)]})


# -- plot ----------------------------------------------------------------------


def trajectories(rows, cam):
    """Per-id arrays of ``(frame, img_x, img_y, map_x, map_y)``; map coords NaN above the horizon."""
    by_id = {}
    for r in rows:
        by_id.setdefault(r.id, []).append(r)
    out = {}
    y_hor = geo.horizon_row(cam)
    for tid, rs in sorted(by_id.items()):
        rs.sort(key=lambda r: r.frame)
        pts = rio.bottom_center(np.array([r.tlwh for r in rs]), cam.img_h).reshape(-1, 2)
        pts = np.column_stack([np.clip(pts[:, 0], 0, cam.img_w), np.clip(pts[:, 1], 0, cam.img_h)])
        ok = pts[:, 1] <= y_hor
        m = np.full_like(pts, np.nan)
        if np.any(ok):
            mx, my = geo.map_point(cam, pts[ok, 0], pts[ok, 1])
            m[ok] = np.column_stack([mx, my])
        frames = np.array([r.frame for r in rs], dtype=float)
        out[tid] = np.column_stack([frames, pts, m])
    return out


def _polyline(pts, color, tid):
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"><title>id {tid}</title></polyline>'


def render_svg(traj, cam, pane=400.0):
    """Two panes side by side: image plane (left) and map plane (right)."""
    gap = 40.0
    img_scale = pane / max(cam.img_w, cam.img_h)
    img_w, img_h = cam.img_w * img_scale, cam.img_h * img_scale
    maps = [t[:, 3:5][np.all(np.isfinite(t[:, 3:5]), axis=1)] for t in traj.values()]
    maps = [m for m in maps if len(m)]
    if maps:
        allm = np.vstack(maps)
        lo, hi = allm.min(axis=0), allm.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        m_scale = pane / span.max()
    else:
        lo, m_scale = np.zeros(2), 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * pane + 3 * gap:.0f}" height="{pane + 2 * gap:.0f}">',
        f'<text x="{gap}" y="{gap * 0.6}" font-size="14">image plane</text>',
        f'<text x="{2 * gap + pane}" y="{gap * 0.6}" font-size="14">map plane</text>',
        f'<rect x="{gap}" y="{gap}" width="{img_w:.2f}" height="{img_h:.2f}" fill="none" stroke="#888"/>',
        f'<rect x="{2 * gap + pane}" y="{gap}" width="{pane}" height="{pane}" fill="none" stroke="#888"/>',
    ]
    for k, (tid, t) in enumerate(traj.items()):
        color = _PALETTE[k % len(_PALETTE)]
        # Image pane: top-left origin, so flip the bottom-origin y.
        ip = np.column_stack([gap + t[:, 1] * img_scale, gap + (cam.img_h - t[:, 2]) * img_scale])
        parts.append(_polyline(ip, color, tid))
        m = t[:, 3:5][np.all(np.isfinite(t[:, 3:5]), axis=1)]
        if len(m):
            mp = np.column_stack([2 * gap + pane + (m[:, 0] - lo[0]) * m_scale, gap + pane - (m[:, 1] - lo[1]) * m_scale])
            parts.append(_polyline(mp, color, tid))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_csv(traj):
    lines = ["id,frame,img_x,img_y,map_x,map_y"]
    for tid, t in traj.items():
        for f, x, y, mx, my in t:
            lines.append(f"{tid},{int(f)},{x:.3f},{y:.3f},{mx:.3f},{my:.3f}")
    return "\n".join(lines) + "\n"


def cmd_plot(args):
    cam = rio.parse_camera_config(_read(args.camera, "camera"))
    rows = rio.parse_mot_rows(_read(args.results, "results"))
    traj = trajectories(rows, cam)
    rio.write_text(args.svg, render_svg(traj, cam))
    if args.csv:
        rio.write_text(args.csv, render_csv(traj))
    _emit({"command": "plot", "ids": sorted(int(i) for i in traj), "svg": str(args.svg), "csv": args.csv})


# -- entry point ---------------------------------------------------------------


def make_parser():
    p = argparse.ArgumentParser(prog="rlmtrack", description="Ground-map multi-pedestrian tracking.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug diagnostics on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="track one or more detection files")
    t.add_argument("dets", nargs="+", help="MOT detection file(s)")
    t.add_argument("--camera", required=True, help="camera config (key=value lines)")
    t.add_argument("--affines", help="affine sidecar: frame,a11,a12,a21,a22,b1,b2")
    t.add_argument("--out", required=True, help="result file, or a directory for several inputs")
    t.add_argument("--config", help="JSON tracker config overrides")
    t.add_argument("--no-density-modulation", action="store_true", help="density does not inflate Kalman noise")
    t.add_argument("--no-rlm", action="store_true", help="associate raw pixel boxes")
    t.add_argument("--threshold-mode", choices=["as_written", "inverse"], help="direction of the low-score threshold")
    t.add_argument("--jobs", type=int, default=1, help="parallel sequences")
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("eval", help="score results against ground truth")
    e.add_argument("gt")
    e.add_argument("results")
    e.add_argument("--iou", type=float, default=0.5)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate a synthetic scenario")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--spec", help="scenario JSON")
    src.add_argument("--preset", default="crossing", choices=sorted(synth.PRESETS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gt", required=True)
    s.add_argument("--dets", required=True)
    s.add_argument("--camera-out", help="also write the scenario camera config")
    s.set_defaults(func=cmd_synth)

    pr = sub.add_parser("project", help="map one pixel (bottom-left origin) onto the ground map")
    pr.add_argument("--camera", required=True)
    pr.add_argument("x", type=float)
    pr.add_argument("y", type=float)
    pr.add_argument("--inverse", action="store_true", help="treat x, y as map coordinates")
    pr.set_defaults(func=cmd_project)

    pl = sub.add_parser("plot", help="image-plane and map-plane trajectories as SVG/CSV")
    pl.add_argument("results")
    pl.add_argument("--camera", required=True)
    pl.add_argument("--svg", required=True)
    pl.add_argument("--csv")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="rlmtrack: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except (RLMError, ValueError, OSError) as exc:
        print(f"rlmtrack {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
