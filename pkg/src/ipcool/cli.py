"""Command-line front end: run scenarios or config files, export traces.

Outputs per run directory:

    trace.csv     full per-step record, header
                  t,y,u,f_hat,e,y_star,t_it,t_rack,t_c_aisle,t_c_wall,
                  t_h_aisle,t_h_wall,p_it,t_out,warming_up,clamped
    metrics.txt   key=value summary (settling measured against a 0.1 degC
                  band held for 0.5 h)
    panel_*.csv   plot-ready columns for the four usual panels
                  (CPU load, outdoor temperature, supply air, IT output)

Floats are written in shortest round-trip form, so every derived column
(e in particular) equals the arithmetic of the other columns exactly as
re-parsed.  Runs are deterministic: the same manifest and seed produce a
byte-identical trace.csv.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import scenarios
from .config import ConfigError, parse_config
from .simloop import DivergenceError, SimConfig, SimTrace, metrics, run_closed_loop

SETTLE_BAND_C = 0.1
SETTLE_WINDOW_H = 0.5

TRACE_HEADER = ("t,y,u,f_hat,e,y_star,t_it,t_rack,t_c_aisle,t_c_wall,"
                "t_h_aisle,t_h_wall,p_it,t_out,warming_up,clamped")

SCENARIO_BUILDERS = {
    "baseline-hold": lambda m: scenarios.scenario_hold(),
    "sudden-cpu": lambda m: scenarios.scenario_sudden_cpu(),
    "sudden-tout": lambda m: scenarios.scenario_sudden_tout(),
    "reference-change": lambda m: scenarios.scenario_reference_change(),
    "param-change": lambda m: scenarios.scenario_param_change(
        1.5 if m.multiplier is None else m.multiplier),
    "synthetic-load": lambda m: scenarios.scenario_load_trace(
        scenarios.synth_load(seed=0 if m.seed is None else m.seed)),
}

SWEEPABLE = ("kp", "alpha", "window", "seed", "multiplier", "noise-std")


@dataclass
class RunManifest:
    """One CLI invocation: what to run, where to write, what to override."""

    scenario: str | None = None
    config_path: str | Path | None = None
    out_dir: str | Path = "."
    kp: float | None = None
    alpha: float | None = None
    window: int | None = None
    seed: int | None = None
    multiplier: float | None = None
    noise_std: float | None = None
    write_panels: bool = True
    sweep: str | None = None

    def __post_init__(self) -> None:
        if (self.scenario is None) == (self.config_path is None):
            raise ValueError("exactly one of scenario / config_path must be given")


def available_scenarios() -> list[str]:
    return sorted(SCENARIO_BUILDERS)


def build_config(manifest: RunManifest) -> SimConfig:
    if manifest.scenario is not None:
        try:
            builder = SCENARIO_BUILDERS[manifest.scenario]
        except KeyError:
            raise ValueError(
                f"unknown scenario {manifest.scenario!r}; available: "
                + ", ".join(available_scenarios())) from None
        if manifest.multiplier is not None and manifest.scenario != "param-change":
            raise ValueError("--multiplier only applies to the param-change scenario")
        config = builder(manifest)
    else:
        config = parse_config(Path(manifest.config_path).read_text(encoding="utf-8"))
    return apply_overrides(config, manifest)


def apply_overrides(config: SimConfig, manifest: RunManifest) -> SimConfig:
    ip, est = config.ip, config.est
    if manifest.alpha is not None:
        ip = replace(ip, alpha=manifest.alpha)
        est = replace(est, alpha=manifest.alpha)
    if manifest.kp is not None:
        ip = replace(ip, kp=manifest.kp)
    if manifest.window is not None:
        est = replace(est, window_samples=manifest.window)
    updates: dict = {"ip": ip, "est": est}
    if manifest.noise_std is not None:
        updates["noise_std"] = manifest.noise_std
    if manifest.seed is not None:
        updates["noise_seed"] = manifest.seed
    return replace(config, **updates)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_trace_csv(trace: SimTrace, path) -> None:
    lines = [TRACE_HEADER]
    for k in range(trace.rows):
        row = [
            trace.t[k], trace.y[k], trace.u[k], trace.f_hat[k], trace.e[k],
            trace.y_star[k], *trace.states[k], trace.p_it[k], trace.t_out[k],
        ]
        lines.append(",".join(_fmt(v) for v in row)
                     + f",{int(trace.warming_up[k])},{int(trace.clamped[k])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Columns of a trace.csv, keyed by header name."""
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    names = text[0].split(",")
    data = np.array([[float(cell) for cell in line.split(",")] for line in text[1:]])
    return {name: data[:, i] for i, name in enumerate(names)}


def write_panel_csvs(trace: SimTrace, out_dir: Path) -> list[Path]:
    panels = {
        "panel_pit.csv": ("t,p_it", [trace.t, trace.p_it]),
        "panel_tout.csv": ("t,t_out", [trace.t, trace.t_out]),
        "panel_u.csv": ("t,u", [trace.t, trace.u]),
        "panel_y.csv": ("t,y,y_star", [trace.t, trace.y, trace.y_star]),
    }
    written = []
    for name, (header, cols) in panels.items():
        lines = [header]
        for k in range(trace.rows):
            lines.append(",".join(_fmt(col[k]) for col in cols))
        path = out_dir / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _slice_trace(trace: SimTrace, start_row: int) -> SimTrace:
    return SimTrace(
        t=trace.t[start_row:], y=trace.y[start_row:], u=trace.u[start_row:],
        f_hat=trace.f_hat[start_row:], e=trace.e[start_row:],
        y_star=trace.y_star[start_row:], states=trace.states[start_row:],
        p_it=trace.p_it[start_row:], t_out=trace.t_out[start_row:],
        warming_up=trace.warming_up[start_row:], clamped=trace.clamped[start_row:],
    )


def write_metrics_txt(trace: SimTrace, config: SimConfig, path) -> None:
    m = metrics(trace, SETTLE_BAND_C, SETTLE_WINDOW_H)
    lines = [
        f"rows={trace.rows}",
        f"duration_h={_fmt(config.duration)}",
        f"settle_band_c={_fmt(SETTLE_BAND_C)}",
        f"settle_window_h={_fmt(SETTLE_WINDOW_H)}",
        f"rms_error={_fmt(m.rms_error)}",
        f"control_effort={_fmt(m.control_effort)}",
        "settling_time=" + (_fmt(m.settling_time) if m.settling_time is not None
                            else "not_settled"),
        "max_abs_error_after_settle=" + (
            _fmt(m.max_abs_error_after_settle)
            if m.max_abs_error_after_settle is not None else "n/a"),
    ]
    if len(config.events):
        last_event = config.events.events[-1].time
        lines.append(f"last_event_time={_fmt(last_event)}")
        start = int(np.searchsorted(trace.t, last_event - 1e-12))
        tail = metrics(_slice_trace(trace, start), SETTLE_BAND_C, SETTLE_WINDOW_H)
        lines.append("post_event_settling_time=" + (
            _fmt(tail.settling_time) if tail.settling_time is not None
            else "not_settled"))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_one(config: SimConfig, out_dir: Path, write_panels: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    trace = run_closed_loop(config)
    write_trace_csv(trace, out_dir / "trace.csv")
    write_metrics_txt(trace, config, out_dir / "metrics.txt")
    if write_panels:
        write_panel_csvs(trace, out_dir)


def _parse_sweep(spec: str) -> tuple[str, list[str]]:
    if "=" not in spec:
        raise ValueError(f"sweep spec must look like param=v1,v2,... got {spec!r}")
    param, _, rest = spec.partition("=")
    param = param.strip()
    if param not in SWEEPABLE:
        raise ValueError(f"sweep parameter must be one of {SWEEPABLE}, got {param!r}")
    values = [v.strip() for v in rest.split(",") if v.strip()]
    if not values:
        raise ValueError("sweep spec carries no values")
    return param, values


def _manifest_with(manifest: RunManifest, param: str, raw: str) -> RunManifest:
    caster = {"kp": float, "alpha": float, "window": int, "seed": int,
              "multiplier": float, "noise-std": float}[param]
    attr = param.replace("-", "_")
    return replace(manifest, **{attr: caster(raw), "sweep": None})


def run_cli(manifest: RunManifest) -> int:
    """Execute a manifest; returns the process exit status."""
    try:
        out_root = Path(manifest.out_dir)
        if manifest.sweep is not None:
            param, values = _parse_sweep(manifest.sweep)
            for raw in values:
                single = _manifest_with(manifest, param, raw)
                sub = out_root / f"{param}-{raw}"
                _run_one(build_config(single), sub, manifest.write_panels)
                print(f"wrote {sub}")
        else:
            _run_one(build_config(manifest), out_root, manifest.write_panels)
            print(f"wrote {out_root}")
        return 0
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ipcool",
        description="Model-free cooling control simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario or config file")
    target = run.add_mutually_exclusive_group(required=True)
    target.add_argument("--scenario", help="built-in scenario name")
    target.add_argument("--config", help="path of a key=value config file")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--kp", type=float, help="override the proportional gain")
    run.add_argument("--alpha", type=float, help="override the control model gain")
    run.add_argument("--window", type=int, help="override the estimator window")
    run.add_argument("--seed", type=int, help="seed for stochastic elements")
    run.add_argument("--multiplier", type=float,
                     help="coupling multiplier (param-change scenario)")
    run.add_argument("--noise-std", type=float, help="measurement noise std (degC)")
    run.add_argument("--sweep", help="repeat the run over param=v1,v2,...")
    run.add_argument("--no-panels", action="store_true",
                     help="skip the per-panel CSV files")
    args = parser.parse_args(argv)

    try:
        manifest = RunManifest(
            scenario=args.scenario,
            config_path=args.config,
            out_dir=args.out,
            kp=args.kp,
            alpha=args.alpha,
            window=args.window,
            seed=args.seed,
            multiplier=args.multiplier,
            noise_std=args.noise_std,
            write_panels=not args.no_panels,
            sweep=args.sweep,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run_cli(manifest)


if __name__ == "__main__":
    raise SystemExit(main())
