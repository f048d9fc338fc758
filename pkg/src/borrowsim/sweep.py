"""Sweep orchestration: cells, threads, result assembly and serialization.

Each sweep enumerates independent (scenario, axis point) cells, computes
them on a thread pool, and merges results back in the fixed enumeration
order, so output is byte-identical regardless of thread count. All Monte
Carlo cells of one run share the same base draw streams (common random
numbers), which the per-cell recomputation contract makes safe.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import diagnostics, hybrid, inference, onearm
from .config import _dispersion_axis, cost_estimate, normalize_config
from .gaussian import SufficientStat
from .priors import (
    CurrentMean,
    ExternalMean,
    MixturePriorSpec,
    Normal,
    NullBoundary,
    StudentT,
    build_mixture_prior,
)
from .scenarios import (
    HybridScenario,
    Informative,
    OCRow,
    OneArmScenario,
    RobustMixture,
    TreatmentPrior,
    UnitInfo,
    describe_form,
    describe_location,
)

__all__ = ["SweepResult", "run_config", "write_outputs", "CSV_COLUMNS"]

CSV_COLUMNS = (
    "scenario_id", "trial", "location", "form", "n_robust", "w", "bias",
    "tie", "power", "power_calibrated", "rmse_std", "w_tilde", "obm",
    "reps", "seed",
)

# Probe used to approximate the all-bias worst case when calibrating the
# no-borrowing comparison; capped locations have flattened out well before
# a conflict of thirty informative-sd units.
_CALIBRATION_PROBE_SD_EXT = 30.0


@dataclass
class SweepResult:
    rows: list[OCRow]
    extras: dict
    meta: dict

    def summary_lines(self) -> list[str]:
        lines = [f"{len(self.rows)} rows"]
        for key, items in self.extras.items():
            lines.append(f"{key}: {len(items)} entries")
        return lines


def _location_policy(name: str, null_mean: float):
    if name == "external_mean":
        return ExternalMean()
    if name == "null_boundary":
        return NullBoundary(null_mean)
    return CurrentMean()


def _form_object(cfg, disp):
    kind, value = disp
    if kind == "k_scale":
        k, scale = value
        return StudentT(df=cfg["form"]["df"], scale=scale, k=int(k))
    return Normal()


def _prior_spec(cfg, location, disp, w, n_ext) -> MixturePriorSpec:
    kind, value = disp
    external = SufficientStat(cfg["external_mean"], n_ext, cfg["sigma"])
    form = _form_object(cfg, disp)
    if kind == "n_robust":
        return MixturePriorSpec(w, external, location, form, n_robust=value)
    if kind == "robust_variance":
        return MixturePriorSpec(
            w, external, location, form, n_robust=None, robust_variance=value
        )
    return MixturePriorSpec(w, external, location, form)


def _scenario(cfg, sizes, location_name, disp, w):
    loc = _location_policy(location_name, cfg.get("null_mean", 0.0))
    if cfg["trial"] == "one-arm":
        spec = _prior_spec(cfg, loc, disp, w, sizes["n_ext"])
        return OneArmScenario(
            null_mean=cfg["null_mean"],
            alt_mean=cfg["alt_mean"],
            n=sizes["n"],
            sigma=cfg["sigma"],
            external=spec.external,
            prior=spec,
            seed=cfg["seed"],
            alpha=cfg["alpha"],
            reps=cfg["reps"],
            scenario_id=cfg["scenario_id"],
        )
    spec = _prior_spec(cfg, loc, disp, w, sizes["n_ext"])
    return HybridScenario(
        n_t=sizes["n_t"],
        n_c=sizes["n_c"],
        sigma=cfg["sigma"],
        external=spec.external,
        prior=spec,
        effect=cfg["effect"],
        seed=cfg["seed"],
        alpha=cfg["alpha"],
        reps=cfg["reps"],
        treatment_prior=TreatmentPrior(cfg["treatment_prior"]),
        control_mean=cfg["control_mean"],
        scenario_id=cfg["scenario_id"],
    )


def _row_id(cfg, sizes, suffix="") -> str:
    base = cfg["scenario_id"]
    default = (
        {"n": cfg.get("n"), "n_ext": cfg["n_ext"]}
        if cfg["trial"] == "one-arm"
        else {"n_t": cfg.get("n_t"), "n_c": cfg.get("n_c"), "n_ext": cfg["n_ext"]}
    )
    if sizes != default:
        base += ":" + ",".join(f"{k}={sizes[k]}" for k in sorted(sizes))
    return base + suffix


def _row_shell(cfg, s, sizes, w, bias, suffix="") -> dict:
    return {
        "scenario_id": _row_id(cfg, sizes, suffix),
        "trial": cfg["trial"],
        "location": describe_location(s.prior.location),
        "form": describe_form(s.prior.form),
        "n_robust": s.prior.effective_n_robust(),
        "w": w,
        "bias": bias,
        "reps": cfg["reps"] if cfg.get("estimator", "mc") == "mc" else 0,
        "seed": cfg["seed"],
    }


def _obm_at(s: OneArmScenario, bias: float) -> float:
    data = SufficientStat(s.null_mean, s.n, s.sigma)
    spec = replace(s.prior, external=s.external_at(bias))
    mix = build_mixture_prior(spec, current=data)
    post = inference.posterior(mix, data)
    return diagnostics.find_modes(post.posterior).ratio


def _grid_cell(cfg, s, bias):
    exact = cfg["estimator"] == "exact"
    metrics = cfg["metrics"]
    out = {}
    one_arm = isinstance(s, OneArmScenario)
    if "tie" in metrics or "power_calibrated" in metrics:
        if one_arm:
            out["tie"] = (onearm.one_arm_tie_exact if exact else onearm.one_arm_tie)(s, bias)
        else:
            out["tie"] = (hybrid.hybrid_tie_exact if exact else hybrid.hybrid_tie)(s, bias)
    if "power" in metrics or "power_calibrated" in metrics:
        if one_arm:
            out["power"] = (onearm.one_arm_power_exact if exact else onearm.one_arm_power)(s, bias)
        else:
            out["power"] = (hybrid.hybrid_power_exact if exact else hybrid.hybrid_power)(s, bias)
    if "rmse" in metrics:
        true_mean = cfg.get("rmse_true_mean")
        _, out["rmse_std"] = onearm.one_arm_rmse(s, bias, true_mean)
    if "w_tilde" in metrics:
        if one_arm:
            out["w_tilde"] = onearm.mean_posterior_weight(s, bias)
        else:
            out["w_tilde"] = hybrid.mean_posterior_weight(s, bias)
    if "obm" in metrics:
        out["obm"] = _obm_at(s, bias)
    return out


def _calibration_level(cfg, s, curve_ties) -> float:
    """Worst-case TIE the calibrated comparison should use for one curve.

    A normal robust component centered at the external mean has no cap
    (the error rate is eventually monotone in the conflict), so the
    all-bias supremum is one; every other combination is capped and the
    grid maximum plus a far-out probe approximates the supremum.
    """
    if isinstance(s.prior.location, ExternalMean) and isinstance(s.prior.form, Normal):
        return 1.0
    probe = _CALIBRATION_PROBE_SD_EXT * s.sd_ext
    if isinstance(s, OneArmScenario):
        probe_ties = [onearm.one_arm_tie_exact(s, b) for b in (-probe, probe)]
    else:
        probe_ties = [hybrid.hybrid_tie_exact(s, b) for b in (-probe, probe)]
    return max(max(curve_ties), max(probe_ties))


_ROW_FIELD = {
    "tie": "tie",
    "power": "power",
    "rmse": "rmse_std",
    "w_tilde": "w_tilde",
    "obm": "obm",
}


def _run_grid(cfg, pool) -> SweepResult:
    sweep = cfg["sweep"]
    biases = sweep["bias"]
    curves = []
    jobs = []
    for sizes in sweep["sample_sizes"]:
        for loc in sweep["location"]:
            for disp in _dispersion_axis(cfg):
                for w in sweep["w"]:
                    s = _scenario(cfg, sizes, loc, disp, w)
                    curves.append((s, sizes, w))
                    jobs.extend((s, bias) for bias in biases)
    results = list(pool.map(lambda j: _grid_cell(cfg, j[0], j[1]), jobs))

    rows: list[OCRow] = []
    want_cal = "power_calibrated" in cfg["metrics"]
    wanted = {_ROW_FIELD[m] for m in cfg["metrics"] if m in _ROW_FIELD}
    for c, (s, sizes, w) in enumerate(curves):
        chunk = results[c * len(biases):(c + 1) * len(biases)]
        cal = None
        if want_cal:
            level = _calibration_level(cfg, s, [m["tie"] for m in chunk])
            cal = hybrid.calibrated_power_no_borrowing(level, s)
        for bias, metrics in zip(biases, chunk):
            shell = _row_shell(cfg, s, sizes, w, bias)
            keep = {k: v for k, v in metrics.items() if k in wanted}
            if want_cal:
                keep["power_calibrated"] = cal
            rows.append(OCRow(**shell, **keep))
    return SweepResult(rows, {}, {})


def _run_bimodality(cfg, pool) -> SweepResult:
    sweep = cfg["sweep"]
    jobs = []
    for sizes in sweep["sample_sizes"]:
        for loc in sweep["location"]:
            for disp in _dispersion_axis(cfg):
                for w in sweep["w"]:
                    s = _scenario(cfg, sizes, loc, disp, w)
                    for bias in sweep["bias"]:
                        jobs.append((s, sizes, w, bias))
    ratios = list(pool.map(lambda j: _obm_at(j[0], j[3]), jobs))
    rows = [
        OCRow(**{**_row_shell(cfg, s, sizes, w, bias), "reps": 0}, obm=r)
        for (s, sizes, w, bias), r in zip(jobs, ratios)
    ]
    return SweepResult(rows, {}, {})


def _run_sweet_spot(cfg, pool) -> SweepResult:
    sweep = cfg["sweep"]
    cells = [
        (sizes, loc, disp, w)
        for sizes in sweep["sample_sizes"]
        for loc in sweep["location"]
        for disp in _dispersion_axis(cfg)
        for w in sweep["w"]
    ]
    biases = sweep["bias"]

    def work(cell):
        sizes, loc, disp, w = cell
        s = _scenario(cfg, sizes, loc, disp, w)
        s = replace(s, bias_grid=tuple(biases))
        spot = hybrid.sweet_spot(s)
        curve = [
            (hybrid.hybrid_tie_exact(s, b), hybrid.hybrid_power_exact(s, b))
            for b in biases
        ]
        return s, spot, curve

    rows: list[OCRow] = []
    spots = []
    for (sizes, loc, disp, w), (s, spot, curve) in zip(cells, pool.map(work, cells)):
        for bias, (tie, power) in zip(biases, curve):
            shell = _row_shell(cfg, s, sizes, w, bias)
            shell["reps"] = 0
            rows.append(OCRow(**shell, tie=tie, power=power))
        spots.append({
            "scenario_id": _row_id(cfg, sizes),
            "location": describe_location(s.prior.location),
            "form": describe_form(s.prior.form),
            "n_robust": s.prior.effective_n_robust(),
            "w": w,
            "lower": None if spot.empty else spot.lower,
            "upper": None if spot.empty else spot.upper,
            "width": None if spot.empty else spot.width,
            "max_power": None if spot.empty else spot.max_power,
            "argmax_bias": None if spot.empty else spot.argmax_bias,
            "empty": spot.empty,
            "contiguous": spot.contiguous,
        })
    return SweepResult(rows, {"sweet_spots": spots}, {})


def _run_table(cfg, pool) -> SweepResult:
    sweep = cfg["sweep"]
    exact = cfg["estimator"] == "exact"
    tie_fn = hybrid.hybrid_tie_exact if exact else hybrid.hybrid_tie
    power_fn = hybrid.hybrid_power_exact if exact else hybrid.hybrid_power
    cells = [
        (sizes, loc, disp, w, delta)
        for sizes in sweep["sample_sizes"]
        for loc in sweep["location"]
        for disp in _dispersion_axis(cfg)
        for w in sweep["w"]
        for delta in sweep["deltas"]
    ]

    def work(cell):
        sizes, loc, disp, w, delta = cell
        s = _scenario(cfg, sizes, loc, disp, w)
        grid = np.linspace(-delta, delta, 41)
        ties = [tie_fn(s, b) for b in grid]
        powers = [power_fn(s, b) for b in grid]
        return s, grid, ties, powers

    rows: list[OCRow] = []
    summary = []
    for (sizes, loc, disp, w, delta), (s, grid, ties, powers) in zip(
        cells, pool.map(work, cells)
    ):
        suffix = f":delta={delta:g}"
        for bias, tie, power in zip(grid, ties, powers):
            shell = _row_shell(cfg, s, sizes, w, float(bias), suffix)
            rows.append(OCRow(**shell, tie=tie, power=power))
        max_tie = max(ties)
        gain = max(powers) - hybrid.calibrated_power_no_borrowing(max_tie, s)
        summary.append({
            "delta": delta,
            "location": describe_location(s.prior.location),
            "w": w,
            "max_tie_pct": 100.0 * max_tie,
            "max_power_gain_pct": 100.0 * gain,
        })
    return SweepResult(rows, {"delta_summary": summary}, {})


_DESIGNS = {
    "informative": Informative(),
    "unit_info": UnitInfo(),
}


def _run_average(cfg, pool) -> SweepResult:
    sweep = cfg["sweep"]
    designs = {
        name: _DESIGNS.get(name, RobustMixture(cfg["rmp_weight"]))
        for name in sweep["design_priors"]
    }
    cells = [
        (sizes, loc, disp, w, dname, shift)
        for sizes in sweep["sample_sizes"]
        for loc in sweep["location"]
        for disp in _dispersion_axis(cfg)
        for w in sweep["w"]
        for dname in sweep["design_priors"]
        for shift in sweep["analysis_shift"]
    ]

    def work(cell):
        sizes, loc, disp, w, dname, shift = cell
        s = _scenario(cfg, sizes, loc, disp, w)
        return (
            s,
            hybrid.average_tie(s, designs[dname], shift),
            hybrid.average_power(s, designs[dname], shift),
        )

    rows = []
    for (sizes, loc, disp, w, dname, shift), (s, tie, power) in zip(
        cells, pool.map(work, cells)
    ):
        shell = _row_shell(cfg, s, sizes, w, shift, f":design={dname}")
        rows.append(OCRow(**shell, tie=tie, power=power))
    return SweepResult(rows, {}, {})


_RUNNERS = {
    "grid": _run_grid,
    "bimodality": _run_bimodality,
    "sweet-spot": _run_sweet_spot,
    "table": _run_table,
    "average": _run_average,
}


def run_config(cfg: dict, threads: int | None = None) -> SweepResult:
    """Execute a scenario file (raw or normalized) and return all results."""
    cfg = normalize_config(cfg)
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        result = _RUNNERS[cfg["kind"]](cfg, pool)
    cells, draws = cost_estimate(cfg)
    payload = json.dumps(cfg, sort_keys=True, default=str).encode()
    result.meta = {
        "scenario_id": cfg["scenario_id"],
        "kind": cfg["kind"],
        "seed": cfg["seed"],
        "reps": cfg["reps"],
        "build_id": hashlib.sha256(payload).hexdigest()[:12],
        "cells": cells,
        "mc_draws": draws,
        "threads": threads,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    return result


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.17g}"
    return str(value)


def write_rows_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            record = asdict(row)
            writer.writerow([_format(record[col]) for col in CSV_COLUMNS])


def write_summary_csv(path, entries) -> None:
    if not entries:
        return
    columns = list(entries[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for e in entries:
            writer.writerow([_format(e[c]) for c in columns])


def write_outputs(result: SweepResult, cfg: dict, out_dir) -> list[str]:
    """Write results.csv / results.json (+ summary.csv) and the metadata
    sidecar; returns the written paths."""
    cfg = normalize_config(cfg)
    os.makedirs(out_dir, exist_ok=True)
    names = cfg["output"]
    written = []

    csv_path = os.path.join(out_dir, names["csv"])
    write_rows_csv(csv_path, result.rows)
    written.append(csv_path)

    json_path = os.path.join(out_dir, names["json"])
    with open(json_path, "w") as fh:
        json.dump(
            {
                "schema_version": cfg["schema_version"],
                "scenario_id": cfg["scenario_id"],
                "kind": cfg["kind"],
                "trial": cfg["trial"],
                "rows": [asdict(r) for r in result.rows],
                "extras": result.extras,
            },
            fh,
            indent=1,
            allow_nan=False,
            default=_json_default,
        )
        fh.write("\n")
    written.append(json_path)

    summary = next(iter(result.extras.values()), None)
    if summary:
        summary_path = os.path.join(out_dir, names["summary"])
        write_summary_csv(summary_path, summary)
        written.append(summary_path)

    meta_path = os.path.join(out_dir, names["meta"])
    with open(meta_path, "w") as fh:
        json.dump(result.meta, fh, indent=1)
        fh.write("\n")
    written.append(meta_path)
    return written


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value)}")
