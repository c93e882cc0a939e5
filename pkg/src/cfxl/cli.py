"""Command-line front end.

Runs an experiment described by a config file or a figure preset and writes
the SE report as CSV.  By default the simulation runs in-process; with
--server it becomes a thin client posting the same request to a running
service instance.  --serve starts that service.
"""

import argparse
import sys

from .harness import (
    PRESET_NAMES,
    config_from_items,
    config_to_items,
    parse_config_text,
    preset,
    run_experiment,
    serialize_report,
)
from .harness.runner import SEReport, SERow

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfxl",
        description="Uplink SE Monte-Carlo simulator for near-field cell-free XL-MIMO",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", metavar="PATH", help="flat key=value config file")
    source.add_argument("--preset", choices=PRESET_NAMES, help="figure preset name")
    parser.add_argument("--scale", type=float, default=1.0,
                        help="scale factor on the preset's antennas per side")
    parser.add_argument("--schemes", metavar="LIST",
                        help="comma-separated combining schemes override")
    parser.add_argument("--seed", type=int, help="RNG seed override")
    parser.add_argument("--locations", type=int, metavar="N",
                        help="number of BS/UE location draws override")
    parser.add_argument("--realizations", type=int, metavar="N",
                        help="channel realizations per location override")
    parser.add_argument("--out", metavar="PATH", help="output CSV path (default: stdout)")
    parser.add_argument("--emit-plot-data", action="store_true",
                        help="also emit per-location average SE samples")
    parser.add_argument("--server", metavar="URL",
                        help="run via a cfxl service instead of in-process")
    parser.add_argument("--serve", action="store_true", help="start the HTTP service")
    parser.add_argument("--host", default="127.0.0.1", help="bind address for --serve")
    parser.add_argument("--port", type=int, default=8000, help="port for --serve")
    return parser


def _overrides_from_args(args) -> dict:
    overrides = {}
    if args.schemes:
        overrides["schemes"] = args.schemes
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.locations is not None:
        overrides["n_locations"] = str(args.locations)
    if args.realizations is not None:
        overrides["n_realizations"] = str(args.realizations)
    return overrides


def _build_config(args):
    if args.config:
        with open(args.config) as fh:
            cfg = parse_config_text(fh.read())
    elif args.preset:
        cfg = preset(args.preset, scale=args.scale)
    else:
        cfg = config_from_items({})
    overrides = _overrides_from_args(args)
    if overrides:
        items = config_to_items(cfg)
        items.update(overrides)
        cfg = config_from_items(items)
    cfg.validate()
    return cfg


def _run_remote(args) -> SEReport:
    import httpx

    if args.config:
        with open(args.config) as fh:
            cfg = parse_config_text(fh.read())
        request = {"preset": None, "overrides": config_to_items(cfg)}
    else:
        request = {"preset": args.preset, "scale": args.scale, "overrides": {}}
    request.setdefault("overrides", {}).update(_overrides_from_args(args))

    url = args.server.rstrip("/") + "/experiments/run"
    response = httpx.post(url, json=request, timeout=None)
    response.raise_for_status()
    payload = response.json()
    rows = tuple(
        SERow(r["scheme"], r["bound"], r["ue_index"], r["se_bits_per_hz"], r["stderr"])
        for r in payload["rows"]
    )
    location_means = {
        tuple(key.split("/", 1)): means
        for key, means in payload.get("location_means", {}).items()
    }
    return SEReport(config_items=payload["config"], rows=rows, location_means=location_means)


def _plot_data_csv(report: SEReport) -> str:
    lines = ["scheme,bound,location_index,avg_se_bits_per_hz"]
    for (scheme, bound), means in sorted(report.location_means.items()):
        for i, value in enumerate(means):
            lines.append(f"{scheme},{bound},{i},{value!r}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.serve:
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    if args.server:
        report = _run_remote(args)
    else:
        report = run_experiment(_build_config(args))

    csv_text = serialize_report(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)

    if args.emit_plot_data:
        plot_text = _plot_data_csv(report)
        if args.out:
            plot_path = args.out + ".plot.csv"
            with open(plot_path, "w") as fh:
                fh.write(plot_text)
            print(f"wrote {plot_path}")
        else:
            sys.stdout.write(plot_text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
