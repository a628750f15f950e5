"""``windrelay`` command-line interface.

Exit codes: 0 success, 2 input error, 3 numerical or solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import TypeAdapter, ValidationError

from windrelay.adaptive import (
    Dataset,
    MlpModel,
    TrainingConfig,
    generate_dataset,
    load_model,
    mlp_forward,
    rmse,
    save_model,
    split_indices,
    train,
    training_curve_rows,
)
from windrelay.config import (
    ConfigError,
    EventSpec,
    Study,
    build_study,
    default_config,
    dump_config,
    load_config,
    speed_grid,
)
from windrelay.errors import InputError, NumericalError
from windrelay.faultsolver import solve
from windrelay.harness import (
    adaptive_reach_from_k,
    fmt,
    read_sweep_csv,
    settings_for,
    simulate,
    sweep,
    write_csv,
    write_sweep_csv,
    write_trips_csv,
)
from windrelay.plot import ZONE_COLORS, Circle, render_rx_svg
from windrelay.relay import classify

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("windrelay")


def _zone_name(zone: int) -> str:
    return f"zone-{zone}" if zone else "outside"


def _cplx(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.6f} {sign} j{abs(z.imag):.6f}"


def _study(args: argparse.Namespace) -> Study:
    cfg = load_config(args.config)
    relay = cfg.relay
    if getattr(args, "mode", None):
        relay = relay.model_copy(update={"solver": args.mode})
    if getattr(args, "adaptive", None):
        relay = relay.model_copy(update={"adaptive": args.adaptive == "on"})
    if relay is not cfg.relay:
        cfg = cfg.model_copy(update={"relay": relay})
    return build_study(cfg)


def _mlp(study: Study, args: argparse.Namespace) -> MlpModel | None:
    if not study.relay.adaptive or study.relay.adaptive_source != "mlp":
        return None
    path = getattr(args, "model", None) or study.relay.model_file
    if not path:
        raise InputError("adaptive_source 'mlp' needs relay.model_file or --model")
    return load_model(path)


def _out(args: argparse.Namespace, configured: str | None, what: str) -> str:
    path = args.out or configured
    if not path:
        raise InputError(f"no output path for the {what}; pass --out")
    return path


def cmd_solve(args: argparse.Namespace) -> int:
    study = _study(args)
    sol = solve(study.model, study.farm, study.wind, study.fault, study.relay.solver)
    z = sol.z_apparent
    result = {
        "mode": study.relay.solver,
        "wind_speed_mps": study.wind.mean_speed,
        "z_apparent": [z.real, z.imag],
        "k_remote": [sol.k_remote.real, sol.k_remote.imag],
        "i_relay": [complex(sol.i_loop).real, complex(sol.i_loop).imag],
        "i_remote": [complex(sol.i_remote).real, complex(sol.i_remote).imag],
        "zone_static": classify(study.settings, z),
    }
    f = study.fault
    print(f"fault: {f.fault_type.value} on {f.line} at {f.distance:g} km, Rf = {f.fault_resistance:g} ohm")
    print(f"wind speed: {study.wind.mean_speed:g} m/s, solver: {study.relay.solver}")
    print(f"apparent impedance: {_cplx(z)} ohm  (|z| = {abs(z):.6f})")
    print(f"in-feed factor k:   {_cplx(sol.k_remote)}")
    print(f"static settings:    {_zone_name(result['zone_static'])}")
    if study.relay.adaptive:
        settings = settings_for(study, study.wind.mean_speed, sol, _mlp(study, args))
        result["zone_adaptive"] = classify(settings, z)
        result["z2_adaptive"] = [settings.z2_reach.real, settings.z2_reach.imag]
        print(f"adaptive settings:  {_zone_name(result['zone_adaptive'])}  (zone-2 reach {_cplx(settings.z2_reach)})")
    print("RESULT " + json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    study = _study(args)
    out = _out(args, study.config.outputs.sweep_csv, "sweep CSV")
    speeds = speed_grid(study.config)
    rows = sweep(study, speeds, mlp=_mlp(study, args))
    write_sweep_csv(out, rows)
    n2 = sum(r.zone_adaptive == 2 for r in rows)
    s2 = sum(r.zone_static == 2 for r in rows)
    print(f"{len(rows)} rows -> {out}; zone-2 static {s2}/{len(rows)}, adaptive {n2}/{len(rows)}")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    study = _study(args)
    out = _out(args, study.config.outputs.plot_svg, "SVG")
    rows = read_sweep_csv(args.csv)
    s = study.settings
    circles = [
        Circle(s.z1_reach, "zone1", ZONE_COLORS[1]),
        Circle(s.z2_reach, "zone2", ZONE_COLORS[2]),
        Circle(s.z3_reach, "zone3", ZONE_COLORS[3]),
    ]
    adaptive = study.relay.adaptive
    if adaptive and rows:
        strongest = max(rows, key=lambda r: (abs(r.k - 1), -r.speed))
        if strongest.k != 1:
            reach = adaptive_reach_from_k(study, strongest.k)
            circles.append(Circle(reach, "zone2-adaptive", ZONE_COLORS[2], dashed=True))
    points = [(r.z, r.zone_adaptive if adaptive else r.zone_static) for r in rows]
    label = "adaptive" if adaptive else "static"
    title = f"Seen impedance over wind speed ({label} zone 2)"
    svg = render_rx_svg(circles, points, title, view=args.view)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    print(f"{len(points)} points -> {out}")
    return EXIT_OK


def _dataset(study: Study) -> Dataset:
    return generate_dataset(
        study.model,
        study.farm,
        study.fault,
        speed_grid(study.config),
        mode=study.relay.solver,
        k_mode=study.relay.k_mode,
    )


def _training_set(study: Study, path: str | None) -> Dataset:
    data = Dataset.from_csv(path) if path else _dataset(study)
    return data.within(study.farm.cut_in, study.farm.cut_out)


def _training_config(study: Study, seed: int | None) -> TrainingConfig:
    t = study.config.training
    return TrainingConfig(
        train_fraction=t.train_fraction,
        learning_rate=t.learning_rate,
        max_epochs=t.max_epochs,
        target_rmse=t.target_rmse_ohm,
        seed=t.seed if seed is None else seed,
    )


def cmd_dataset(args: argparse.Namespace) -> int:
    study = _study(args)
    out = _out(args, study.config.outputs.dataset_csv, "dataset CSV")
    data = _dataset(study)
    data.to_csv(out)
    print(f"{len(data)} rows -> {out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    study = _study(args)
    out = _out(args, study.config.outputs.model_file, "model file")
    curve = args.curve or study.config.outputs.curve_csv or str(Path(out).with_suffix(".curve.csv"))
    data = _training_set(study, args.dataset)
    model, report = train(data, _training_config(study, args.seed))
    save_model(model, out)
    write_csv(
        curve,
        ("epoch", "train_rmse", "val_rmse"),
        [(str(e), fmt(t), fmt(v)) for e, t, v in training_curve_rows(report)],
    )
    mean = float(np.mean(data.y))
    print(f"rows: {len(data)} (train {len(report.train_idx)}, validation {len(report.val_idx)})")
    print(f"epochs: {report.epochs} ({report.stopped})")
    print(f"train_rmse_ohm: {fmt(report.final_train_rmse)}")
    print(f"val_rmse_ohm: {fmt(report.final_val_rmse)}")
    print(f"val_rmse_relative: {fmt(report.final_val_rmse / mean)}")
    print(f"model -> {out}; curve -> {curve}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    study = _study(args)
    model = load_model(args.model)
    data = _training_set(study, args.dataset)
    cfg = _training_config(study, args.seed)
    train_idx, val_idx = split_indices(len(data), cfg.train_fraction, cfg.seed)
    x, y = data.x, data.y
    err = np.abs(np.asarray(mlp_forward(model, x)) - y)
    mean = float(np.mean(y))
    print(f"rows: {len(data)} (train {len(train_idx)}, validation {len(val_idx)})")
    print(f"train_rmse_ohm: {fmt(rmse(model, x[train_idx], y[train_idx]))}")
    print(f"val_rmse_ohm: {fmt(rmse(model, x[val_idx], y[val_idx]))}")
    print(f"val_rmse_relative: {fmt(rmse(model, x[val_idx], y[val_idx]) / mean)}")
    print(f"max_abs_error_ohm: {fmt(float(err.max()))}")
    return EXIT_OK


def _events(path: str) -> list[EventSpec]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read event script {path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if isinstance(raw, dict):
        raw = raw.get("events", None)
    try:
        return TypeAdapter(list[EventSpec]).validate_python(raw)
    except ValidationError as exc:
        msgs = [f"{'.'.join(map(str, e['loc'])) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise ConfigError(f"{path}: " + "; ".join(msgs)) from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    study = _study(args)
    out = _out(args, study.config.outputs.trips_csv, "trip CSV")
    sim = study.config.simulation
    events = _events(args.events) if args.events else sim.events
    records = simulate(
        study,
        events,
        dt=sim.dt_s if args.dt is None else args.dt,
        t_end=sim.t_end_s,
        adaptive=study.relay.adaptive,
        mlp=_mlp(study, args),
    )
    write_trips_csv(out, records)
    for r in records:
        print(f"trip at {r.time:.3f} s, {_zone_name(r.zone)}, z at pickup {_cplx(r.z_at_pickup)} ohm")
    if not records:
        print("no trip")
    return EXIT_OK


def cmd_default_config(args: argparse.Namespace) -> int:
    text = dump_config(default_config())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="windrelay", description="Distance protection with wind-farm in-feed.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name: str, func, help: str, config: bool = True) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        if config:
            sp.add_argument("--config", required=True, metavar="PATH")
            sp.add_argument("--mode", choices=("full", "reduced"))
            sp.add_argument("--adaptive", choices=("on", "off"))
            sp.add_argument("--seed", type=int)
        sp.add_argument("--out", metavar="PATH")
        sp.set_defaults(func=func)
        return sp

    command("solve", cmd_solve, "solve the configured fault and classify it").add_argument("--model")
    command("sweep", cmd_sweep, "sweep wind speed and write the sweep CSV").add_argument("--model")
    sp = command("plot", cmd_plot, "render a sweep CSV on the R-X plane")
    sp.add_argument("--csv", required=True, metavar="PATH")
    sp.add_argument("--view", choices=("full", "locus"), default="full")
    command("dataset", cmd_dataset, "generate the (speed, zone-2 reach) dataset")
    sp = command("train", cmd_train, "train the reach regressor")
    sp.add_argument("--dataset", metavar="PATH")
    sp.add_argument("--curve", metavar="PATH")
    sp = command("eval", cmd_eval, "evaluate a saved model")
    sp.add_argument("--model", required=True, metavar="PATH")
    sp.add_argument("--dataset", metavar="PATH")
    sp = command("simulate", cmd_simulate, "run a timed event script through the relay")
    sp.add_argument("--events", metavar="PATH")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--model")
    command("default-config", cmd_default_config, "print the default configuration", config=False)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # solver failures not covered above
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
