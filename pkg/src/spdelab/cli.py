"""Command-line front end: experiment orchestration and artifact emission.

Commands
--------
assemble-check   run the closed-form operator oracles
convergence      coupled coarse-vs-reference rate study (CSV + SVG + manifest)
verify           Monte Carlo inequality and metric checks (CSV + alarm log)
holder           dyadic Hölder-exponent estimates for solution paths
simulate         one path of the scheme, final state dumped as text

Configuration is a JSON document (see README for the schema); flags override
file values.  Exit codes: 0 success, 1 validation failure, 2 numerical
failure, 3 statistical alarm.  Runs are reproducible from their manifest:
the same config and master seed yield byte-identical CSV payloads.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import l0
from .checks import assembly_checks
from .convergence import convergence_study
from .driver import sample_driver
from .exceptions import (
    CapacityError,
    DomainError,
    FactorizationError,
    NumericalError,
    SpdeLabError,
    StatisticalAlarm,
)
from .mesh import assemble, build_mesh
from .noise import NoiseStream
from .rng import DRIVER_TAG, L0_MARK_TAG, L0_WIENER_TAG, WIENER_TAG
from .stepper import SchemeConfig, evolve_fast, simulate_path
from .svgplot import GuideLine, Series, loglog_svg, write_svg

STREAM_TAGS = {
    "wiener": f"{WIENER_TAG:#x}",
    "driver": f"{DRIVER_TAG:#x}",
    "analysis_wiener": f"{L0_WIENER_TAG:#x}",
    "analysis_mark": f"{L0_MARK_TAG:#x}",
}

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_ALARM = 3

#: bdg estimators are meaningless below this many paths (documented pre).
MIN_BDG_PATHS = 1000


def _load_config(path: str | None, overrides: dict) -> dict:
    cfg = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise DomainError("config root must be a JSON object")
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    return cfg


def _require(cfg: dict, key: str, kind, what: str):
    if key not in cfg:
        raise DomainError(f"config missing required key {key!r} ({what})")
    val = cfg[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise DomainError(f"config key {key!r} must be {what}, got {val!r}")
    return val


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(path: Path, command: str, cfg: dict, extra: dict) -> None:
    doc = {"command": command, "config": cfg, "stream_tags": STREAM_TAGS}
    doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, default=str)
        fh.write("\n")


def _gnuplot_script(series: list, guides: list, xlabel: str) -> str:
    """Self-contained gnuplot script mirroring the SVG figure."""
    lines = [
        "set logscale xy",
        "set key bottom right",
        f'set xlabel "{xlabel}"',
        'set ylabel "relative error"',
    ]
    for i, s in enumerate(series):
        lines.append(f"$curve{i} << EOD")
        lines.extend(f"{x:.17g} {y:.17g}" for x, y in zip(s.x, s.y))
        lines.append("EOD")
    plots = [f'$curve{i} using 1:2 with linespoints title "{s.label}"'
             for i, s in enumerate(series)]
    for g in guides:
        scale = g.anchor_y / g.anchor_x**g.slope
        plots.append(
            f'{scale:.6g} * x**{g.slope:g} with lines dashtype 2 title "{g.label}"'
        )
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def cmd_assemble_check(args) -> int:
    cases = [(1, args.level if args.dim == 1 else 3), (2, 2)]
    if args.dim is not None:
        cases = [(args.dim, args.level)]
    failed = False
    for dim, level in cases:
        results = assembly_checks(dim, level, corrupt=args.inject_corruption)
        for res in results:
            status = "PASS" if res.passed else "FAIL"
            print(f"[{status}] dim={dim} level={level} {res.name}: {res.detail}")
            failed |= not res.passed
    return EXIT_VALIDATION if failed else EXIT_OK


def _convergence_config(args) -> dict:
    cfg = _load_config(
        args.config,
        {
            "master_seed": args.seed,
            "out_dir": args.out,
            "n_workers": args.workers,
            "axis": args.axis,
        },
    )
    cfg.setdefault("k", 0.5)
    cfg.setdefault("n_modes", 1000)
    cfg.setdefault("beta", 1.0)
    cfg.setdefault("n_workers", 1)
    if "gammas" not in cfg:
        cfg["gammas"] = [_require(cfg, "gamma", (int, float), "a number")]
    _require(cfg, "dim", int, "1 or 2")
    _require(cfg, "axis", str, "'space' or 'time'")
    _require(cfg, "coarse_levels", list, "a list of integers")
    _require(cfg, "ref_level", int, "an integer")
    _require(cfg, "n_paths", int, "an integer")
    _require(cfg, "master_seed", int, "an integer")
    if cfg["axis"] == "space":
        _require(cfg, "time_exp", int, "shared dt exponent (dt = 2^-time_exp)")
    else:
        _require(cfg, "space_level", int, "the fixed mesh level")
    return cfg


def cmd_convergence(args) -> int:
    cfg = _convergence_config(args)
    if args.dry_run:
        print(json.dumps(cfg, indent=2))
        return EXIT_OK
    out = _out_dir(cfg)
    axis = cfg["axis"]
    t0 = time.perf_counter()

    reports = []
    for gamma in cfg["gammas"]:
        if axis == "space":
            space_level, time_steps = cfg["ref_level"], 2 ** cfg["time_exp"]
        else:
            space_level, time_steps = cfg["space_level"], 2 ** cfg["ref_level"]
        base = SchemeConfig(
            dim=cfg["dim"],
            gamma=float(gamma),
            space_level=space_level,
            time_steps=time_steps,
            master_seed=cfg["master_seed"],
            k=cfg["k"],
            mode="final_time",
            n_modes=cfg["n_modes"],
        )
        reports.append(
            convergence_study(
                base,
                axis,
                list(cfg["coarse_levels"]),
                cfg["ref_level"],
                cfg["n_paths"],
                n_workers=cfg["n_workers"],
                beta=cfg["beta"],
            )
        )

    error_rows = [row for rep in reports for row in rep.error_rows()]
    _write_csv(
        out / "errors.csv",
        ["axis", "gamma", "resolution", "path_seed", "error"],
        error_rows,
    )
    _write_csv(
        out / "summary.csv",
        ["axis", "dim", "gamma", "fitted_rate", "theoretical_rate", "n_paths", "n_levels"],
        [rep.summary_row() for rep in reports],
    )

    series, guides = [], []
    for rep in reports:
        xs = [lv.resolution for lv in rep.levels if not lv.saturated]
        ys = [lv.mean_error for lv in rep.levels if not lv.saturated]
        if not xs:
            continue
        series.append(Series(label=f"gamma = {rep.gamma:g}", x=xs, y=ys))
        guides.append(
            GuideLine(
                label=f"rate {rep.theoretical_rate:g}",
                slope=rep.theoretical_rate,
                anchor_x=xs[0],
                anchor_y=ys[0] * 1.4,
            )
        )
    xlabel = "mesh size h" if axis == "space" else "time step"
    svg = loglog_svg(
        series,
        guides,
        title=f"Relative pathwise error at t = 1 ({axis}, d = {cfg['dim']})",
        xlabel=xlabel,
        ylabel="relative error",
    )
    write_svg(str(out / "convergence.svg"), svg)
    (out / "convergence.gp").write_text(_gnuplot_script(series, guides, xlabel))

    _write_manifest(
        out / "manifest.json",
        "convergence",
        cfg,
        {
            "seeds": list(reports[0].seeds) if reports else [],
            "wall_time_s": time.perf_counter() - t0,
            "outputs": [
                "errors.csv",
                "summary.csv",
                "convergence.svg",
                "convergence.gp",
            ],
        },
    )
    for rep in reports:
        fitted = "n/a" if rep.fitted_rate is None else f"{rep.fitted_rate:.3f}"
        print(
            f"{axis} d={rep.dim} gamma={rep.gamma:g}: fitted rate {fitted}, "
            f"theoretical {rep.theoretical_rate:g}"
        )
    return EXIT_OK


def _verify_config(args) -> dict:
    cfg = _load_config(
        args.config,
        {"master_seed": args.seed, "out_dir": args.out, "n_paths": args.paths},
    )
    cfg.setdefault("n_paths", 100_000)
    cfg.setdefault("master_seed", 1)
    cfg.setdefault("p_values", [1.0, 2.0, 4.0])
    cfg.setdefault("steps", 64)
    cfg.setdefault("dim_q", 1)
    return cfg


def cmd_verify(args) -> int:
    cfg = _verify_config(args)
    out = _out_dir(cfg)
    seed = cfg["master_seed"]
    n_paths = cfg["n_paths"]
    t0 = time.perf_counter()

    enforce = n_paths >= MIN_BDG_PATHS
    if not enforce:
        print(
            f"warning: {n_paths} paths gives too little statistical power; "
            f"estimators run at the {MIN_BDG_PATHS}-path minimum and "
            "pass/fail is suppressed"
        )

    failures: list[str] = []
    alarms: list[str] = []
    metric_rows: list[tuple] = []

    # metric spot checks (exact arithmetic)
    spot = l0.dp_metric(np.array([0.5, 0.5]), 2.0)
    metric_rows.append(("dp_spot_half", 2.0, spot))
    if abs(spot - 0.5) > 1e-12:
        failures.append("dp_metric spot value")
    # convergence in probability: x_n = |N(0,1)| / n
    gen = np.random.Generator(np.random.Philox(key=[seed, 0xD0]))
    base_samples = np.abs(gen.standard_normal(10_000))
    dps = [l0.dp_metric(base_samples / n, 1.0) for n in (1, 10, 100)]
    for n, val in zip((1, 10, 100), dps):
        metric_rows.append(("dp_convergence_in_probability", float(n), val))
    if not (dps[0] > dps[1] > dps[2]):
        failures.append("dp_metric monotone trend")

    # Itô isometry for the unit integrand
    unit = l0.ElementaryIntegrand(
        dim_q=1, partition=np.array([0.0, 1.0]), family="deterministic_const"
    )
    sample = l0.ito_integral_elementary(unit, seed, max(n_paths, MIN_BDG_PATHS))
    var = float(np.var(sample.values[:, -1, 0]))
    metric_rows.append(("ito_isometry_variance", 1.0, var))
    if enforce and abs(var - 1.0) > 0.03:
        failures.append(f"isometry variance {var:.4f} off by more than 3%")
    _write_csv(out / "verify_metric.csv", ["check", "parameter", "value"], metric_rows)

    # truncated BDG ratios: finite and stable across independent seeds
    bdg_paths = max(n_paths, MIN_BDG_PATHS)
    partition = np.linspace(0.0, 1.0, cfg["steps"] + 1)
    bdg_rows: list[tuple] = []
    for family in l0.FAMILIES:
        phi = l0.ElementaryIntegrand(
            dim_q=cfg["dim_q"], partition=partition, family=family
        )
        for p in cfg["p_values"]:
            ratios = []
            for i in range(2):
                try:
                    ratios.append(l0.bdg_ratio(phi, float(p), bdg_paths, seed + 101 * i))
                except StatisticalAlarm as exc:
                    alarms.append(f"bdg_ratio {family} p={p}: {exc}")
                    ratios.append(float("nan"))
            spread = abs(ratios[0] - ratios[1]) / max(abs(r) for r in ratios)
            bdg_rows.append((family, p, ratios[0], ratios[1], spread))
            if enforce and not all(np.isfinite(ratios)):
                failures.append(f"bdg_ratio not finite for {family}, p={p}")
            elif enforce and spread > 0.10:
                failures.append(
                    f"bdg_ratio unstable for {family}, p={p}: spread {spread:.3f}"
                )
    # summed inequality over disjoint blocks
    for m in (1, 4, 16):
        phis = l0.block_integrands("wiener_functional", m, max(4, cfg["steps"] // m))
        try:
            ratio = l0.bdg_sum_ratio(phis, 2.0, bdg_paths, seed)
        except StatisticalAlarm as exc:
            alarms.append(f"bdg_sum_ratio m={m}: {exc}")
            ratio = float("nan")
        bdg_rows.append(("block_sum", float(m), ratio, ratio, 0.0))
        if enforce and not np.isfinite(ratio):
            failures.append(f"bdg_sum_ratio not finite for m={m}")
    _write_csv(
        out / "verify_bdg.csv",
        ["family", "p", "ratio_seed_a", "ratio_seed_b", "relative_spread"],
        bdg_rows,
    )

    with open(out / "alarms.log", "w", encoding="utf-8") as fh:
        for line in alarms:
            fh.write(line + "\n")
    _write_manifest(
        out / "verify_manifest.json",
        "verify",
        cfg,
        {"wall_time_s": time.perf_counter() - t0, "failures": failures, "alarms": alarms},
    )

    if alarms:
        return EXIT_ALARM
    if enforce and failures:
        for f in failures:
            print(f"FAIL: {f}")
        return EXIT_VALIDATION
    print("verify: all checks passed" if enforce else "verify: completed (informational)")
    return EXIT_OK


def _holder_config(args) -> dict:
    cfg = _load_config(
        args.config, {"master_seed": args.seed, "out_dir": args.out}
    )
    cfg.setdefault("dim", 1)
    cfg.setdefault("gamma", 0.75)
    cfg.setdefault("k", 0.5)
    cfg.setdefault("space_level", 5)
    cfg.setdefault("time_exp", 13)
    cfg.setdefault("m_max", 13)
    cfg.setdefault("m_min", 6)
    cfg.setdefault("bm_m_max", 16)
    cfg.setdefault("bm_m_min", 8)
    cfg.setdefault("n_seeds", 20)
    cfg.setdefault("n_modes", 1000)
    cfg.setdefault("master_seed", 3)
    if cfg["time_exp"] < cfg["m_max"]:
        raise DomainError("time_exp must be >= m_max to snapshot dyadic times")
    return cfg


def cmd_holder(args) -> int:
    cfg = _holder_config(args)
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    ops = assemble(build_mesh(cfg["dim"], cfg["space_level"]))
    rows: list[tuple] = []
    spde_exps, bm_exps = [], []
    for i in range(cfg["n_seeds"]):
        seed = cfg["master_seed"] + i
        config = SchemeConfig(
            dim=cfg["dim"],
            gamma=cfg["gamma"],
            space_level=cfg["space_level"],
            time_steps=2 ** cfg["time_exp"],
            master_seed=seed,
            k=cfg["k"],
            mode="final_time",
            n_modes=cfg["n_modes"],
        )
        stream = NoiseStream(
            seed=seed, fine_level=cfg["space_level"], fine_steps=config.time_steps
        )
        driver = sample_driver(seed, cfg["n_modes"])
        state = evolve_fast(
            config, stream, driver, ops=ops, snapshot_level=cfg["m_max"]
        )
        est = l0.holder_exponent(state.snapshots, cfg["m_min"], norm=ops.m_norm)
        rows.append(("spde", seed, est.exponent))
        spde_exps.append(est.exponent)
        bm = l0.brownian_path(seed, cfg["bm_m_max"])
        est_bm = l0.holder_exponent(bm, cfg["bm_m_min"])
        rows.append(("brownian", seed, est_bm.exponent))
        bm_exps.append(est_bm.exponent)
    _write_csv(out / "holder.csv", ["kind", "seed", "exponent"], rows)
    _write_manifest(
        out / "holder_manifest.json",
        "holder",
        cfg,
        {"wall_time_s": time.perf_counter() - t0},
    )
    print(
        f"holder: spde mean {np.mean(spde_exps):.3f}, "
        f"brownian mean {np.mean(bm_exps):.3f} over {cfg['n_seeds']} seeds"
    )
    return EXIT_OK


def _simulate_config(args) -> dict:
    cfg = _load_config(args.config, {"master_seed": args.seed, "out_dir": args.out})
    _require(cfg, "dim", int, "1 or 2")
    _require(cfg, "gamma", (int, float), "a number")
    _require(cfg, "space_level", int, "an integer")
    _require(cfg, "time_exp", int, "dt exponent")
    _require(cfg, "master_seed", int, "an integer")
    cfg.setdefault("k", 0.5)
    cfg.setdefault("n_modes", 1000)
    cfg.setdefault("mode", "per_step")
    return cfg


def cmd_simulate(args) -> int:
    cfg = _simulate_config(args)
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    config = SchemeConfig(
        dim=cfg["dim"],
        gamma=float(cfg["gamma"]),
        space_level=cfg["space_level"],
        time_steps=2 ** cfg["time_exp"],
        master_seed=cfg["master_seed"],
        k=cfg["k"],
        mode=cfg["mode"],
        n_modes=cfg["n_modes"],
    )
    stream = NoiseStream(
        seed=cfg["master_seed"],
        fine_level=cfg["space_level"],
        fine_steps=config.time_steps,
    )
    driver = sample_driver(cfg["master_seed"], cfg["n_modes"])
    state = simulate_path(
        config, stream, driver, snapshot_level=cfg.get("snapshot_level")
    )
    with open(out / "final_state.txt", "w", encoding="utf-8") as fh:
        for value in state.alpha:
            fh.write(f"{value:.17g}\n")
    outputs = ["final_state.txt"]
    if state.snapshots is not None:
        dt_snap = 1.0 / (state.snapshots.shape[0] - 1)
        with open(out / "snapshots.txt", "w", encoding="utf-8") as fh:
            for j, snap in enumerate(state.snapshots):
                fh.write(f"# t = {j * dt_snap:.17g}\n")
                for value in snap:
                    fh.write(f"{value:.17g}\n")
        outputs.append("snapshots.txt")
    _write_manifest(
        out / "simulate_manifest.json",
        "simulate",
        cfg,
        {"wall_time_s": time.perf_counter() - t0, "outputs": outputs},
    )
    print(f"simulate: wrote {len(state.alpha)} nodal values")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdelab",
        description="Numerical laboratory for a parabolic SPDE with fractional noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("assemble-check", help="run the operator oracles")
    p_check.add_argument("--dim", type=int, choices=(1, 2), default=None)
    p_check.add_argument("--level", type=int, default=3)
    p_check.add_argument("--inject-corruption", action="store_true")
    p_check.set_defaults(func=cmd_assemble_check)

    for name, func, extra in (
        ("convergence", cmd_convergence, True),
        ("verify", cmd_verify, False),
        ("holder", cmd_holder, False),
        ("simulate", cmd_simulate, False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None, dest="seed")
        p.add_argument("--out", type=str, default=None)
        if extra:
            p.add_argument("--workers", type=int, default=None)
            p.add_argument("--axis", type=str, choices=("space", "time"), default=None)
            p.add_argument("--dry-run", action="store_true")
        if name == "verify":
            p.add_argument("--paths", type=int, default=None)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, CapacityError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, FactorizationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except StatisticalAlarm as exc:
        print(f"statistical alarm: {exc}", file=sys.stderr)
        return EXIT_ALARM
    except SpdeLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
