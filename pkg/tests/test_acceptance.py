"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary of any pytest run.
"""

import cmath
import csv
import math
import time

import numpy as np

from windrelay.adaptive import Dataset, TrainingConfig, load_model, mlp_gradient, rmse, split_indices
from windrelay.cli import main
from windrelay.errors import NoConvergence
from windrelay.faultsolver import FaultScenario, FaultType, solve_fault, solve_reduced
from windrelay.network import polar
from windrelay.phasor import estimate_phasor
from windrelay.relay import zone2_adaptive, zone2_static
from windrelay.windfarm import WindFarm, WindState

from conftest import random_network
from test_adaptive import numeric_gradient, random_model
from test_faultsolver import compare_with_oracle, slg

RESULTS: list[str] = []


def report(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def run_cli(*args):
    code = main([str(a) for a in args])
    assert code == 0, f"{args[0]} exited with {code}"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_unit_infeed_reduces_to_static_reach():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        zab = polar(rng.uniform(1, 200), rng.uniform(30, 89))
        remotes = [polar(rng.uniform(0.5, 200), rng.uniform(30, 89)) for _ in range(int(rng.integers(1, 6)))]
        a, s = zone2_adaptive(zab, remotes, 1.0), zone2_static(zab, remotes)
        worst = max(worst, abs(a - s) / abs(s))
    report(1, "k=1 adaptive reach equals static reach", worst <= 1e-12, f"max rel diff {worst:.2e} over 1000 sets")


def test_reduced_infeed_identity():
    rng = np.random.default_rng(102)
    cases = [
        (
            polar(rng.uniform(1, 100), rng.uniform(60, 89)),
            polar(rng.uniform(0.1, 50), rng.uniform(60, 89)),
            polar(rng.uniform(1e3, 1e5), rng.uniform(-30, 30)),
            polar(rng.uniform(0, 2000), rng.uniform(-180, 180)),
        )
        for _ in range(1000)
    ]
    t0 = time.perf_counter()
    worst = 0.0
    for z_a, z_f, e, i_rem in cases:
        sol = solve_reduced(z_a, z_f, e, i_rem)
        want = z_a + sol.k_remote * z_f
        worst = max(worst, abs(sol.z_apparent - want) / abs(want))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 1.0
    report(2, "reduced in-feed identity", ok, f"max rel err {worst:.2e}, {dt:.3f} s for 1000 scenarios")


def test_full_solver_matches_nodal_oracle(default_model):
    rng = np.random.default_rng(103)
    farm = WindFarm(connection_bus="C1")
    t0 = time.perf_counter()
    worst, count, declined = 0.0, 0, 0
    for v in (0.0, 6.0, 12.0, 20.0):
        for sc in (slg("BC2", 16.0), slg("AB", 30.0, 5.0), FaultScenario(FaultType.THREE_PHASE, "BC1", 10.0)):
            worst = max(worst, compare_with_oracle(default_model, farm, WindState(v), sc))
            count += 1
    for trial in range(100):
        m = random_network(rng, int(rng.integers(2, 11)), extra_edges=int(rng.integers(0, 3)))
        f = WindFarm(n_turbines=int(rng.integers(1, 20)), connection_bus=m.infeed_bus)
        ln = m.lines[int(rng.integers(len(m.lines)))]
        d = float(rng.uniform(0, ln.length)) if trial % 5 else ln.length * float(rng.integers(0, 2))
        ftype = FaultType.SLG if trial % 3 else FaultType.THREE_PHASE
        sc = FaultScenario(ftype, ln.id, d, float(rng.uniform(0, 10)))
        try:
            worst = max(worst, compare_with_oracle(m, f, WindState(float(rng.uniform(0, 26))), sc))
            count += 1
        except NoConvergence:
            # no unity-pf operating point exists; the solver refuses rather than answers
            declined += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 10.0 and declined <= 5
    detail = f"max rel err {worst:.2e} on {count} solved networks ({declined} without an operating point), {dt:.2f} s"
    report(3, "full solve matches nodal oracle", ok, detail)


def test_radial_slg_reads_eighty_percent(default_model):
    sol = solve_fault(default_model, WindFarm(connection_bus="C1"), WindState(0.0), slg("AB", 80.0))
    z_line = 0.8 * default_model.line("AB").z1
    err = abs(sol.z_apparent - z_line) / abs(z_line)
    report(4, "radial bolted SLG at 80% of A-B", err < 0.01, f"rel err {err:.2e}")


def test_static_misreach_and_adaptive_cover(tmp_path):
    cfg = tmp_path / "cfg.json"
    run_cli("default-config", "--out", cfg)
    out = tmp_path / "sweep.csv"
    run_cli("sweep", "--config", cfg, "--adaptive", "on", "--out", out)
    rows = read_rows(out)
    speeds = [float(r["speed_mps"]) for r in rows]
    static = [r["zone_static"] == "2" for r in rows]
    adaptive = sum(r["zone_adaptive"] == "2" for r in rows)
    misreach = [
        (v1, v2)
        for i, v1 in enumerate(speeds)
        for j, v2 in enumerate(speeds)
        if v1 < v2 and static[i] and not static[j] and 4 <= v1 and v2 <= 25
    ]
    ok = bool(misreach) and adaptive == len(rows) == 43
    pair = f"v1={misreach[0][0]} v2={misreach[0][1]}" if misreach else "no mis-reach pair"
    report(5, "static mis-reach, adaptive zone 2 everywhere", ok, f"{pair}; adaptive zone 2 in {adaptive}/{len(rows)} rows")


def test_backprop_matches_finite_differences():
    rng = np.random.default_rng(106)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        m = random_model(rng)
        x, y = rng.uniform(4, 25), rng.uniform(34, 36)
        fd, _ = numeric_gradient(m, x, y)
        bp = mlp_gradient(m, x, y).flat()
        rel = np.abs(bp - fd) / np.maximum(np.maximum(np.abs(bp), np.abs(fd)), 1e-6)
        worst = max(worst, float(rel.max()))
    dt = time.perf_counter() - t0
    ok = worst < 1e-4 and dt < 5.0
    report(6, "MLP gradient check", ok, f"max rel err {worst:.2e} over 100 points, {dt:.2f} s")


def test_trained_network_accuracy(tmp_path):
    cfg = tmp_path / "cfg.json"
    run_cli("default-config", "--out", cfg)
    data, model = tmp_path / "d.csv", tmp_path / "m.txt"
    t0 = time.perf_counter()
    run_cli("dataset", "--config", cfg, "--out", data)
    run_cli("train", "--config", cfg, "--dataset", data, "--out", model, "--curve", tmp_path / "c.csv")
    dt = time.perf_counter() - t0
    net = load_model(model)
    rows = [(float(r["speed_mps"]), float(r["reach_ohm"])) for r in read_rows(data)]
    rows = [(v, y) for v, y in rows if 4.0 <= v < 25.0]
    frac = TrainingConfig().train_fraction
    ds = Dataset(tuple(v for v, _ in rows), tuple(y for _, y in rows))
    _, val = split_indices(len(ds), frac, 1)
    val_rmse = rmse(net, ds.x[val], ds.y[val])
    rel = val_rmse / float(np.mean(ds.y))
    ok = rel < 0.02 and net.w1.size == 85 and 0.6 <= frac <= 0.7 and dt < 60.0
    detail = f"val RMSE {rel:.2e} of mean reach, {net.w1.size} hidden, train fraction {frac}, {dt:.1f} s"
    report(7, "MLP held-out accuracy", ok, detail)


def test_zone_timers_in_simulation(tmp_path):
    cfg = tmp_path / "cfg.json"
    run_cli("default-config", "--out", cfg)
    checks = []
    for dt in (0.001, 0.005):
        for zone, dist, delay in (("2", 16.0, 0.3), ("3", 22.0, 1.0)):
            ev = tmp_path / f"ev_{zone}.json"
            ev.write_text(
                '[{"t_s": 0.0, "action": "wind", "speed_mps": 0.0},'
                f' {{"t_s": 0.1, "action": "fault_on", "distance_km": {dist}}}]'
            )
            out = tmp_path / f"trips_{zone}_{dt}.csv"
            run_cli("simulate", "--config", cfg, "--adaptive", "off", "--events", ev, "--dt", dt, "--out", out)
            trips = read_rows(out)
            got = float(trips[0]["time_s"]) - 0.1 if len(trips) == 1 and trips[0]["zone"] == zone else math.nan
            checks.append((zone, dt, got, abs(got - delay) <= dt + 1e-12))
    ok = all(c[3] for c in checks)
    detail = ", ".join(f"zone {z} dt={d}: {g:.3f} s" for z, d, g, _ in checks)
    report(8, "zone-2/zone-3 timer coordination", ok, detail)


def test_dft_accuracy_and_rejection():
    n, f = 32, 60.0
    t = np.arange(2 * n) / (n * f)
    worst_mag = worst_deg = worst_rej = 0.0
    for amp in (1.0, 63.5, 7.6e4):
        for deg in (-179.0, -90.0, -30.0, 0.0, 45.0, 120.0, 180.0):
            x = amp * math.sqrt(2) * np.cos(2 * np.pi * f * t + math.radians(deg))
            p = estimate_phasor(x)
            worst_mag = max(worst_mag, abs(p.magnitude - amp) / amp)
            worst_deg = max(worst_deg, abs((p.degrees - deg + 180.0) % 360.0 - 180.0))
            dc = x + 0.5 * amp
            h3 = x + 0.3 * amp * math.sqrt(2) * np.cos(3 * 2 * np.pi * f * t + 0.7)
            want = cmath.rect(amp, math.radians(deg))
            for y in (dc, h3):
                worst_rej = max(worst_rej, abs(complex(estimate_phasor(y)) - want) / amp)
    ok = worst_mag < 1e-3 and worst_deg < 0.1 and worst_rej < 1e-3
    detail = f"mag err {worst_mag:.1e}, phase err {worst_deg:.1e} deg, DC/3rd err {worst_rej:.1e}"
    report(9, "DFT phasor estimate", ok, detail)


def test_every_command_is_byte_deterministic(tmp_path, capsys):
    def run_all(d):
        d.mkdir()
        cfg = d / "cfg.json"
        run_cli("default-config", "--out", cfg)
        run_cli("sweep", "--config", cfg, "--adaptive", "on", "--out", d / "sweep.csv")
        run_cli("plot", "--config", cfg, "--adaptive", "on", "--csv", d / "sweep.csv", "--out", d / "rx.svg")
        run_cli("dataset", "--config", cfg, "--out", d / "data.csv")
        run_cli(
            "train", "--config", cfg, "--seed", 1, "--dataset", d / "data.csv",
            "--out", d / "model.txt", "--curve", d / "curve.csv",
        )
        run_cli("simulate", "--config", cfg, "--adaptive", "on", "--out", d / "trips.csv")
        capsys.readouterr()
        run_cli("solve", "--config", cfg, "--adaptive", "on")
        run_cli("eval", "--config", cfg, "--model", d / "model.txt", "--dataset", d / "data.csv")
        (d / "stdout.txt").write_text(capsys.readouterr().out)
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    a, b = run_all(tmp_path / "a"), run_all(tmp_path / "b")
    differ = sorted(k for k in a if a[k] != b.get(k))
    ok = not differ and a.keys() == b.keys()
    report(10, "byte-identical reruns", ok, f"{len(a)} outputs compared" + (f", differ: {differ}" if differ else ""))
