"""Command-line front end: simulate | sweep | estimate | plot.

Exit codes: 0 on success, 2 on user/input errors, 3 on I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bodies import Conformation, apply_pose, geometric_center
from .config import (
    build_experiment_config,
    build_scenario,
    config_digest,
    parse_config,
    write_manifest,
)
from .errors import ConfigError, RblError
from .harness import ResultRow, ResultTable, run_sweep
from .measurement import (
    ConnectivityMask,
    CrossDistanceMatrix,
    NoiseModel,
    add_range_noise,
    apply_mask,
    connectivity_mask,
    cross_edm,
    full_edm,
)
from .plotting import render_rmse_figure
from .rotation import estimate_rotation_ego, estimate_rotation_naive, estimate_rotation_opp
from .translation import (
    default_epsilon,
    estimate_translation_mds,
    estimate_translation_robust,
)

EXIT_OK = 0
EXIT_USER = 2
EXIT_IO = 3


def _fmt_matrix(a: np.ndarray) -> str:
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in np.atleast_2d(a)) + "\n"


def _read_matrix(path: Path, name: str) -> np.ndarray:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    try:
        rows = [[float(x) for x in ln.split()] for ln in text.splitlines() if ln.strip()]
        arr = np.array(rows, dtype=float)
        if arr.ndim != 2:
            raise ValueError("rows have unequal lengths")
    except ValueError as exc:
        raise ConfigError(f"{name} file {path}: not a numeric matrix ({exc})") from exc
    return arr


def _write_measurements(path: Path, d12: np.ndarray, w: np.ndarray) -> None:
    n1, n2 = d12.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n1} {n2}\n")
        fh.write(_fmt_matrix(d12))
        fh.write(_fmt_matrix(w))


def _read_measurements(path: Path) -> tuple[CrossDistanceMatrix, ConnectivityMask]:
    try:
        lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError:
        raise
    if not lines:
        raise ConfigError(f"measurement file {path} is empty")
    try:
        n1, n2 = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ConfigError(f"measurement file {path}: bad header {lines[0]!r}") from exc
    if len(lines) != 1 + 2 * n1:
        raise ConfigError(
            f"measurement file {path}: expected {2 * n1} matrix rows, got {len(lines) - 1}"
        )

    def block(rows, what):
        try:
            arr = np.array([[float(x) for x in ln.split()] for ln in rows], dtype=float)
        except ValueError as exc:
            raise ConfigError(f"measurement file {path}: bad {what} row ({exc})") from exc
        if arr.shape != (n1, n2):
            raise ConfigError(
                f"measurement file {path}: {what} block is {arr.shape}, expected {(n1, n2)}"
            )
        return arr

    d = block(lines[1 : 1 + n1], "distance")
    w = block(lines[1 + n1 :], "mask")
    if not np.all((w == 0) | (w == 1)):
        raise ConfigError(f"measurement file {path}: mask entries must be 0/1")
    m = int(np.count_nonzero(w.min(axis=0) == 1))
    return CrossDistanceMatrix(d), ConnectivityMask(w, m=m)


def _load_config(path_str: str) -> tuple[dict, str]:
    path = Path(path_str)
    text = path.read_text(encoding="utf-8")
    return parse_config(text), text


def _switch(value: str | None) -> bool | None:
    if value is None:
        return None
    if value == "on":
        return True
    if value == "off":
        return False
    raise ConfigError(f"expected on/off, got {value!r}")


def _apply_genie(methods: tuple[str, ...], genie: bool | None) -> tuple[str, ...]:
    if genie is None:
        return methods
    out = []
    for method in methods:
        trans, _, rot = method.partition("+")
        if genie:
            trans = {"mds": "genie-mds", "robust": "genie-robust"}.get(trans, trans)
            rot = {"ego": "opp-genie", "naive-eig": "opp-genie"}.get(rot, rot)
        else:
            trans = {"genie-mds": "mds", "genie-robust": "robust"}.get(trans, trans)
            rot = {"opp-genie": "ego"}.get(rot, rot)
        out.append(trans + ("+" + rot if rot else ""))
    return tuple(out)


def cmd_simulate(args) -> int:
    sections, text = _load_config(args.config)
    scenario = build_scenario(sections, _switch(args.recenter))
    noise = sections.get("noise", {})
    sigma = float(noise.get("sigma", "0").split()[0])
    seed = args.seed if args.seed is not None else int(noise.get("seed", "0"))
    sweep = sections.get("sweep", {})
    tok = (args.completeness or sweep.get("completeness", "full").split()[:1] or ["full"])[0]
    m = min(scenario.n1, scenario.n2) if tok == "full" else int(tok)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    s2 = apply_pose(scenario.c2, scenario.pose2)
    stacked = np.hstack([scenario.c1.c, s2.s])
    d12 = cross_edm(scenario.c1.c, s2)
    noisy = add_range_noise(d12, NoiseModel(sigma, seed))
    w = connectivity_mask(scenario.n1, scenario.n2, m)
    observed = apply_mask(noisy, w)
    edm = full_edm(stacked, scenario.n1)

    (out / "conformation1.txt").write_text(_fmt_matrix(scenario.c1.c), encoding="utf-8")
    (out / "conformation2.txt").write_text(_fmt_matrix(scenario.c2.c), encoding="utf-8")
    (out / "sensors.txt").write_text(_fmt_matrix(stacked), encoding="utf-8")
    (out / "edm.txt").write_text(_fmt_matrix(edm.d), encoding="utf-8")
    _write_measurements(out / "measurements.txt", observed.d12, w.w)
    write_manifest(out / "manifest.json", args.config, str(out), config_digest(text))
    print(f"scenario '{scenario.label}' written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sections, text = _load_config(args.config)
    cfg = build_experiment_config(
        sections,
        recenter_override=_switch(args.recenter),
        sigma_grid_override=args.sigma_grid,
        methods_override=args.methods,
        completeness_override=args.completeness,
        trials_override=args.trials,
        seed_override=args.seed,
        completion_override=_switch(args.completion),
    )
    if args.genie is not None:
        from dataclasses import replace

        cfg = replace(cfg, methods=_apply_genie(cfg.methods, _switch(args.genie)))
    table = run_sweep(cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    csv_path.write_text(table.to_csv(), encoding="utf-8")
    write_manifest(out / "manifest.json", args.config, str(out), config_digest(text))
    if not args.no_figure:
        render_rmse_figure(list(table.rows), str(out / "rmse_t.svg"), metric="t")
        if any(r.rmse_pose is not None for r in table.rows):
            render_rmse_figure(list(table.rows), str(out / "rmse_pose.svg"), metric="pose")
    for r in table.rows:
        pose = f" rmse_pose={r.rmse_pose:.6g}" if r.rmse_pose is not None else ""
        print(
            f"{r.method} sigma={r.sigma:g} completeness={r.completeness:.4g} "
            f"rmse_t={r.rmse_t:.6g}{pose} failures={r.failures}/{r.trials}"
        )
    print(f"results written to {csv_path}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    d12, w = _read_measurements(Path(args.measurements))
    c1_arr = _read_matrix(Path(args.conformation), "conformation")
    if c1_arr.shape[0] != 3:
        raise ConfigError(f"conformation must have 3 rows, got {c1_arr.shape[0]}")
    c1 = Conformation(c1_arr)
    if c1.n_points != d12.shape[0]:
        raise ConfigError(
            f"dimension mismatch: conformation has {c1.n_points} landmarks "
            f"but measurements have {d12.shape[0]} rows"
        )

    if args.method == "mds":
        t_est = estimate_translation_mds(c1, d12, w)
    else:
        eps = default_epsilon(d12, w, args.sigma)
        t_est = estimate_translation_robust(c1, d12, w, eps)

    record = {
        "method": t_est.method,
        "t_hat": [float(x) for x in t_est.t_hat],
        "iterations": t_est.iterations,
        "objective": t_est.objective,
        "converged": t_est.converged,
        "rotation_method": None,
        "q_hat": None,
    }
    if args.rotation != "none":
        if args.rotation == "opp-genie":
            if args.target_conformation is None:
                raise ConfigError("--rotation opp-genie requires --target-conformation")
            c2 = Conformation(_read_matrix(Path(args.target_conformation), "target conformation"))
            r_est = estimate_rotation_opp(c1, c2, d12, w)
        else:
            from .pipeline import build_embedding

            products = build_embedding(c1, d12, w)
            if args.rotation == "ego":
                r_est = estimate_rotation_ego(
                    c1, products.d12_used, products.w_effective, products.embedding.s2_aligned
                )
            else:
                r_est = estimate_rotation_naive(products.embedding.s2_aligned)
        record["rotation_method"] = r_est.method
        record["q_hat"] = [float(x) for x in r_est.q_hat.q.ravel()]
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def cmd_plot(args) -> int:
    path = Path(args.csv)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    lines = text.splitlines()
    if not lines or lines[0].strip() != ResultTable.CSV_HEADER:
        raise ConfigError(
            f"{path}: CSV header mismatch; expected {ResultTable.CSV_HEADER!r}"
        )
    rows = []
    for rec in csv.DictReader(lines):
        try:
            rows.append(
                ResultRow(
                    method=rec["method"],
                    sigma=float(rec["sigma"]),
                    completeness=float(rec["completeness"]),
                    rmse_t=float(rec["rmse_t"]),
                    rmse_pose=float(rec["rmse_pose"]) if rec["rmse_pose"] else None,
                    trials=int(rec["trials"]),
                    failures=int(rec["failures"]),
                    seed=int(rec["seed"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed row {rec!r} ({exc})") from exc
    if not rows:
        raise ConfigError(f"{path}: CSV has no data rows")
    render_rmse_figure(rows, args.out, metric=args.metric, logy=not args.linear_y)
    print(f"figure written to {args.out}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rblkit",
        description="Rigid-body localization toolkit: scenario simulation, "
        "Monte-Carlo RMSE sweeps, one-shot estimation and plotting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="dump scenario artifacts to files")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--recenter", choices=["on", "off"])
    p_sim.add_argument("--completeness", nargs=1)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a Monte-Carlo RMSE sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--trials", type=int)
    p_sweep.add_argument("--methods", nargs="+")
    p_sweep.add_argument("--completeness", nargs="+")
    p_sweep.add_argument("--sigma-grid", nargs="+", type=float, dest="sigma_grid")
    p_sweep.add_argument("--completion", choices=["on", "off"])
    p_sweep.add_argument("--recenter", choices=["on", "off"])
    p_sweep.add_argument("--genie", choices=["on", "off"])
    p_sweep.add_argument("--no-figure", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_est = sub.add_parser("estimate", help="one-shot pose estimate from files")
    p_est.add_argument("--measurements", required=True)
    p_est.add_argument("--conformation", required=True)
    p_est.add_argument("--method", choices=["mds", "robust"], default="mds")
    p_est.add_argument(
        "--rotation", choices=["ego", "naive-eig", "opp-genie", "none"], default="ego"
    )
    p_est.add_argument("--target-conformation")
    p_est.add_argument("--sigma", type=float, default=0.0)
    p_est.set_defaults(func=cmd_estimate)

    p_plot = sub.add_parser("plot", help="render RMSE curves from a sweep CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--metric", choices=["t", "pose"], default="t")
    p_plot.add_argument("--linear-y", action="store_true")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RblError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
