"""Operator command line.

Subcommands:

    simulate            run the agent phase, write snapshot + stats report
    prepare-conditions  run both polarization cells, emit 6 tagged snapshots
    export-curve        dump reaction-probability curves (CSV + figure)
    serve               host the participant-facing feed service
    write-config        emit a fully populated default config file

Config files are JSON with three sections (simulation, feed_weights,
gateway); every default is pre-filled by ``write-config``. Exit codes:
0 success, 2 config problems (the message names the offending path),
3 live mode without the API key present, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .conditions import prepare_conditions
from .engine import ConfigError, SimulationConfig, compute_stats, run
from .feed import Bias, FeedWeights
from .gateway import Gateway, GatewayConfig, GatewayError, LiveMode, MissingApiKey, StubMode
from .model import dumps_canonical
from .reports import curve_rows, save_curve_figure, save_stats_figure
from .storage import RunManifest, write_atomic, write_curve_csv, write_manifest, write_stats_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NO_API_KEY = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_ERROR):
        super().__init__(message)
        self.code = code


DEFAULT_GATEWAY_SETTINGS = {
    "mode": "stub",
    "noise_sigma": 0.0,
    "lexicon_path": None,
    "endpoint_url": "https://api.openai.com/v1/chat/completions",
    "model_name": "gpt-4o-mini",
    "api_key_env_var": "POLARSIM_API_KEY",
    "timeout": 30.0,
    "max_retries": 2,
    "request_budget": None,
}


def default_run_file(polarization: str = "polarized", seed: int = 42) -> dict:
    sim = (
        SimulationConfig.polarized(seed=seed)
        if polarization == "polarized"
        else SimulationConfig.moderate(seed=seed)
    )
    return {
        "simulation": sim.to_dict(),
        "feed_weights": FeedWeights().to_dict(),
        "gateway": dict(DEFAULT_GATEWAY_SETTINGS),
    }


def load_run_file(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CliError(f"config file {path} does not exist", EXIT_CONFIG)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {path}: {exc}", EXIT_CONFIG)
    if not isinstance(doc, dict):
        raise CliError(f"config file {path} must hold a JSON object", EXIT_CONFIG)
    return doc


def sim_config_from(doc: dict) -> SimulationConfig:
    try:
        return SimulationConfig.from_dict(doc.get("simulation", doc))
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"invalid simulation config: {exc}", EXIT_CONFIG)


def build_gateway(settings: dict, mode_override: Optional[str]) -> Gateway:
    mode_name = mode_override or settings.get("mode", "stub")
    budget = settings.get("request_budget")
    if mode_name == "stub":
        mode = StubMode(
            noise_sigma=settings.get("noise_sigma", 0.0),
            lexicon_path=settings.get("lexicon_path"),
        )
        return Gateway(GatewayConfig(mode=mode, request_budget=budget))
    if mode_name == "live":
        live = LiveMode(
            endpoint_url=settings.get("endpoint_url", DEFAULT_GATEWAY_SETTINGS["endpoint_url"]),
            model_name=settings.get("model_name", DEFAULT_GATEWAY_SETTINGS["model_name"]),
            api_key_env_var=settings.get(
                "api_key_env_var", DEFAULT_GATEWAY_SETTINGS["api_key_env_var"]
            ),
            timeout=settings.get("timeout", 30.0),
            max_retries=settings.get("max_retries", 2),
        )
        if not os.environ.get(live.api_key_env_var):
            raise CliError(
                f"live mode needs the {live.api_key_env_var} environment variable set",
                EXIT_NO_API_KEY,
            )
        return Gateway(GatewayConfig(mode=live, request_budget=budget))
    raise CliError(f"unknown gateway mode {mode_name!r}", EXIT_CONFIG)


def _with_seed(config: SimulationConfig, seed: Optional[int]) -> SimulationConfig:
    if seed is None:
        return config
    return SimulationConfig.from_dict({**config.to_dict(), "seed": seed})


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.config:
        doc = load_run_file(Path(args.config))
    else:
        doc = default_run_file(args.polarization)
    config = _with_seed(sim_config_from(doc), args.seed)
    gateway = build_gateway(doc.get("gateway", DEFAULT_GATEWAY_SETTINGS), args.mode)
    try:
        state = run(config, gateway)
    finally:
        gateway.close()

    from .storage import save_snapshot

    out = Path(args.out)
    save_snapshot(out, config, state)
    outputs = [str(out)]
    if args.stats_out:
        stats = compute_stats(state)
        stats_path = Path(args.stats_out)
        write_stats_csv(stats_path, stats)
        figure_path = stats_path.with_suffix(".png")
        save_stats_figure(stats, figure_path)
        outputs += [str(stats_path), str(figure_path)]
    write_manifest(
        out.with_name(out.name + ".manifest.json"),
        RunManifest(
            command="simulate",
            seed=config.seed,
            mode=args.mode or doc.get("gateway", {}).get("mode", "stub"),
            config_path=args.config,
            outputs=outputs,
        ),
    )
    print(f"snapshot written to {out} ({len(state.messages)} messages, seed {config.seed})")
    return EXIT_OK


def cmd_prepare_conditions(args) -> int:
    polarized_doc = (
        load_run_file(Path(args.config_polarized))
        if args.config_polarized
        else default_run_file("polarized")
    )
    moderate_doc = (
        load_run_file(Path(args.config_moderate))
        if args.config_moderate
        else default_run_file("moderate")
    )
    polarized = sim_config_from(polarized_doc)
    moderate = sim_config_from(moderate_doc)
    if args.seed is not None:
        polarized = _with_seed(polarized, args.seed)
        moderate = _with_seed(moderate, args.seed + 1)
    gateway_settings = polarized_doc.get("gateway", DEFAULT_GATEWAY_SETTINGS)
    if gateway_settings.get("mode", "stub") == "live" or args.mode == "live":
        build_gateway(gateway_settings, args.mode)  # fail fast on a missing key

    out_dir = Path(args.snapshot_dir)
    biases = [Bias(args.bias)] if args.bias else list(Bias)
    written = prepare_conditions(
        out_dir,
        gateway_factory=lambda: build_gateway(gateway_settings, args.mode),
        polarized_config=polarized,
        moderate_config=moderate,
        biases=biases,
    )
    from .storage import load_snapshot

    for label in ("polarized", "moderate"):
        snapshot = load_snapshot(out_dir / f"condition_{label}_{biases[0].value}.json")
        stats = compute_stats(snapshot.state)
        stats_path = out_dir / f"stats_{label}.csv"
        write_stats_csv(stats_path, stats, condition=label)
        save_stats_figure(stats, stats_path.with_suffix(".png"))
        written += [stats_path, stats_path.with_suffix(".png")]
    write_manifest(
        out_dir / "manifest.json",
        RunManifest(
            command="prepare-conditions",
            seed=args.seed,
            mode=args.mode or gateway_settings.get("mode", "stub"),
            config_path=args.config_polarized,
            outputs=[str(p) for p in written],
        ),
    )
    print(f"{len(written)} artifacts written to {out_dir}")
    return EXIT_OK


def cmd_export_curve(args) -> int:
    rows = curve_rows(points=args.points)
    out = Path(args.out)
    write_curve_csv(out, rows)
    outputs = [str(out)]
    if not args.no_figure:
        figure_path = out.with_suffix(".png")
        save_curve_figure(rows, figure_path)
        outputs.append(str(figure_path))
    write_manifest(
        out.with_name(out.name + ".manifest.json"),
        RunManifest(
            command="export-curve", seed=None, mode="n/a", config_path=None, outputs=outputs
        ),
    )
    print(f"curve data written to {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import signal

    import uvicorn

    from .service import create_app

    weights = None
    if args.config:
        doc = load_run_file(Path(args.config))
        if "feed_weights" in doc:
            try:
                weights = FeedWeights.from_dict(doc["feed_weights"])
            except ValueError as exc:
                raise CliError(f"invalid feed_weights in {args.config}: {exc}", EXIT_CONFIG)
    try:
        app = create_app(
            snapshot_dir=Path(args.snapshot_dir),
            log_dir=Path(args.log_dir) if args.log_dir else None,
            weights=weights,
        )
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_CONFIG)
    # uvicorn re-raises a captured SIGTERM after its graceful shutdown; a
    # benign handler turns that re-raise into a clean exit 0 (logs flushed
    # by the app's shutdown hook).
    signal.signal(signal.SIGTERM, lambda signum, frame: None)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_write_config(args) -> int:
    doc = default_run_file(args.polarization, seed=args.seed if args.seed is not None else 42)
    write_atomic(Path(args.out), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"default {args.polarization} config written to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one agent-phase simulation")
    p.add_argument("--config", help="JSON run file (simulation/feed_weights/gateway)")
    p.add_argument(
        "--polarization",
        choices=["polarized", "moderate"],
        default="polarized",
        help="built-in config cell used when --config is absent",
    )
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--mode", choices=["stub", "live"], help="override the gateway mode")
    p.add_argument("--out", default="snapshot.json", help="snapshot output path")
    p.add_argument("--stats-out", help="also write the stats CSV (+ PNG) here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("prepare-conditions", help="emit the six condition snapshots")
    p.add_argument("--snapshot-dir", default="conditions", help="output directory")
    p.add_argument("--config-polarized", help="run file for the polarized cell")
    p.add_argument("--config-moderate", help="run file for the moderate cell")
    p.add_argument("--seed", type=int, help="base seed (moderate cell uses seed+1)")
    p.add_argument("--mode", choices=["stub", "live"], help="override the gateway mode")
    p.add_argument("--bias", choices=[b.value for b in Bias], help="emit only this bias cell")
    p.set_defaults(func=cmd_prepare_conditions)

    p = sub.add_parser("export-curve", help="export reaction-probability curves")
    p.add_argument("--out", default="reaction_curves.csv", help="CSV output path")
    p.add_argument("--points", type=int, default=201, help="grid points across [-1, 1]")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_export_curve)

    p = sub.add_parser("serve", help="host the participant feed service")
    p.add_argument("--snapshot-dir", default="conditions", help="prepared snapshot directory")
    p.add_argument("--log-dir", help="session event-log directory")
    p.add_argument("--config", help="run file supplying feed_weights for the ranking")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("write-config", help="emit a default config file")
    p.add_argument(
        "--polarization", choices=["polarized", "moderate"], default="polarized"
    )
    p.add_argument("--seed", type=int, help="seed to embed (default 42)")
    p.add_argument("--out", default="polarsim.json", help="where to write the config")
    p.set_defaults(func=cmd_write_config)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MissingApiKey as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_API_KEY
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
