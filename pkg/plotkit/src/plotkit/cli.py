"""Command-line interface: render traces or FPS snapshots from run logs."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, plot_fps_snapshots, plot_parameter_traces


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from fault-diagnosis run logs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_tr = sub.add_parser("traces", help="per-parameter estimate and set bounds")
    p_tr.add_argument("csv", nargs="+", help="run CSV file(s); several overlay")
    p_tr.add_argument("--out", required=True, help="output image path")
    p_tr.add_argument("--labels", nargs="*", default=[])
    p_tr.add_argument("--fault-at", type=float, default=None,
                      help="draw a fault marker at this time [s]")
    p_tr.add_argument("--title", default=None)

    p_fps = sub.add_parser("fps", help="feasible-set snapshots from logged vertices")
    p_fps.add_argument("csv", help="run CSV (vertex sidecar located next to it)")
    p_fps.add_argument("--at", default="", help="comma-separated timesteps")
    p_fps.add_argument("--out", required=True)
    p_fps.add_argument("--title", default=None)

    args = parser.parse_args(argv)

    if args.command == "traces":
        spec = PlotSpec(
            csv_paths=list(args.csv),
            out_path=args.out,
            labels=list(args.labels),
            fault_time=args.fault_at,
            title=args.title,
        )
        out = plot_parameter_traces(spec)
    else:
        steps = [int(s) for s in args.at.split(",") if s.strip()]
        spec = PlotSpec(
            csv_paths=[args.csv],
            out_path=args.out,
            snapshot_steps=steps,
            title=args.title,
        )
        out = plot_fps_snapshots(spec)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
