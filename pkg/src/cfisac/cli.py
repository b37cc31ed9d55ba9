"""Command-line entry point: presets, custom runs, threshold calibration."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .harness import (
    ResultSet,
    preset_beamformer_comparison,
    preset_mode_comparison,
    preset_rx_sweep,
    run_experiment,
)
from .metrics import write_cdf_csv, write_samples_csv
from .sensing import calibrate_threshold, calibrate_threshold_mc

OUTPUT_ROOT_ENV = "CFISAC_OUTPUT_ROOT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfisac",
        description="Link-level Monte Carlo simulator for cell-free massive MIMO "
        "joint communication and multistatic sensing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config: bool):
        p.add_argument("--config", required=needs_config, help="flat key=value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", default=None, choices=["UTC", "UC", "TC", "CF"])
        p.add_argument("--drops", type=int, default=None)
        p.add_argument("--fading", type=int, default=None)
        p.add_argument("--pfa", type=float, default=None)
        p.add_argument(
            "--set",
            metavar="KEY=VALUE",
            action="append",
            default=[],
            dest="extra",
            help="override any config field (repeatable)",
        )

    p_run = sub.add_parser("run", help="run a single experiment arm")
    add_common(p_run, needs_config=True)
    p_run.add_argument("--rx", type=int, default=None, help="receive APs per region")
    p_run.add_argument("--kzf", type=int, default=None, help="annulled UEs for ZF sensing beams")

    p_modes = sub.add_parser("preset-modes", help="UTC/UC/TC/CF comparison")
    add_common(p_modes, needs_config=False)

    p_rx = sub.add_parser("preset-rx-sweep", help="receive-AP count sweep")
    add_common(p_rx, needs_config=False)
    p_rx.add_argument("--rx", default="1,2,3,4", help="comma-separated receive-AP counts")

    p_bf = sub.add_parser("preset-beamformers", help="MF vs partial-ZF sensing beams")
    add_common(p_bf, needs_config=False)
    p_bf.add_argument("--kzf", default="1,2", help="comma-separated annulled-UE counts")

    p_cal = sub.add_parser("calibrate-pfa", help="analytic vs Monte Carlo threshold")
    p_cal.add_argument("--rank", type=int, required=True, help="total basis rank of the cluster")
    p_cal.add_argument("--pfa", type=float, default=0.01)
    p_cal.add_argument("--sigma2", type=float, default=1.0)
    p_cal.add_argument("--mc-draws", type=int, default=200_000)
    p_cal.add_argument("--seed", type=int, default=1)

    p_val = sub.add_parser("validate-config", help="parse and echo a resolved config")
    add_common(p_val, needs_config=True)

    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    named = {
        "seed": args.seed,
        "mode": args.mode,
        "n_drops": args.drops,
        "n_fading": args.fading,
        "pfa_target": args.pfa,
    }
    if getattr(args, "command", "") == "run":
        named["m_rx_per_region"] = args.rx
        named["k_zf"] = args.kzf
    overrides = {k: str(v) for k, v in named.items() if v is not None}
    for item in args.extra:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value
    return apply_overrides(cfg, overrides).validate()


def _output_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(OUTPUT_ROOT_ENV, "results")
    return Path(root) / args.command


def _write_arm(out_dir: Path, rs: ResultSet) -> None:
    write_samples_csv(out_dir / f"{rs.label}_samples.csv", rs.sample_rows())
    write_cdf_csv(out_dir / f"{rs.label}_cdf_rate_bps.csv", rs.rate_cdf())
    write_cdf_csv(out_dir / f"{rs.label}_cdf_sensing_snr_db.csv", rs.snr_cdf())
    with open(out_dir / f"{rs.label}_detections.txt", "w") as fh:
        fh.write("drop epoch region statistic threshold decision truth sensing_snr_db\n")
        for row in rs.detection_rows():
            d, f, l, s, t, dec, tr, snr = row
            fh.write(f"{d} {f} {l} {float(s)!r} {float(t)!r} {dec} {tr} {float(snr)!r}\n")


def _summarize(results: dict[str, ResultSet]) -> str:
    lines = []
    for label, rs in sorted(results.items()):
        pd, pfa = rs.detection()
        lines.append(
            f"arm={label} median_rate_bps={rs.median_rate()!r} "
            f"median_sensing_snr_db={rs.median_snr_db()!r} "
            f"pd={'na' if pd is None else repr(pd)} pfa={'na' if pfa is None else repr(pfa)} "
            f"fronthaul_max={rs.fronthaul_max} fronthaul_mean={rs.fronthaul_mean!r} "
            f"power_dev_max={rs.diagnostics.power_dev_max!r} "
            f"zf_leakage_max={rs.diagnostics.zf_leakage_max!r} "
            f"zf_fallbacks={rs.diagnostics.zf_fallbacks}/{rs.diagnostics.zf_beams}"
        )
    return "\n".join(lines) + "\n"


def _run_and_write(args, results: dict[str, ResultSet], cfg: ExperimentConfig) -> int:
    out_dir = _output_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(cfg.to_text())
    for rs in results.values():
        _write_arm(out_dir, rs)
    (out_dir / "summary.txt").write_text(_summarize(results))
    print(f"wrote {len(results)} arm(s) to {out_dir}")
    print(_summarize(results), end="")
    return 0


def execute(args) -> int:
    if args.command == "calibrate-pfa":
        analytic = calibrate_threshold(args.rank, args.sigma2, args.pfa)
        mc = calibrate_threshold_mc(
            args.rank, args.sigma2, args.pfa, args.mc_draws, np.random.default_rng(args.seed)
        )
        print(f"analytic_threshold={analytic!r}")
        print(f"monte_carlo_threshold={mc!r}")
        print(f"relative_difference={abs(analytic - mc) / analytic!r}")
        return 0

    cfg = _resolve_config(args)
    if args.command == "validate-config":
        print(cfg.to_text(), end="")
        return 0
    if args.command == "run":
        return _run_and_write(args, {"run": run_experiment(cfg, label="run")}, cfg)
    if args.command == "preset-modes":
        return _run_and_write(args, preset_mode_comparison(cfg), cfg)
    if args.command == "preset-rx-sweep":
        counts = [int(x) for x in str(args.rx).split(",") if x.strip()]
        return _run_and_write(args, preset_rx_sweep(cfg, counts), cfg)
    if args.command == "preset-beamformers":
        values = [int(x) for x in str(args.kzf).split(",") if x.strip()]
        return _run_and_write(args, preset_beamformer_comparison(cfg, values), cfg)
    raise ConfigError(f"unhandled command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return execute(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
