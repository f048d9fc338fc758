"""Built-in scenario templates.

Each recipe materializes one complete scenario file reproducing a main
or appendix exhibit at desk scale: a one-arm error/estimation sweep, the
bimodality map, posterior-weight propagation, hybrid power/TIE curves,
sweet spots, bias-restricted summaries and prior-averaged error rates.
All share the reference setup: sigma = 1, twenty current observations
per arm, fifteen external observations, one-sided level 0.025.
"""

from __future__ import annotations

import math

DEFAULT_SEED = 20260810
_SD_EXT = 1.0 / math.sqrt(15.0)


def _one_arm_base(scenario_id):
    return {
        "schema_version": 1,
        "kind": "grid",
        "trial": "one-arm",
        "scenario_id": scenario_id,
        "seed": DEFAULT_SEED,
        "reps": 1_000_000,
        "alpha": 0.025,
        "sigma": 1.0,
        "n": 20,
        "n_ext": 15,
        "null_mean": 0.0,
        "alt_mean": 0.5,
    }


def _hybrid_base(scenario_id):
    return {
        "schema_version": 1,
        "kind": "grid",
        "trial": "hybrid",
        "scenario_id": scenario_id,
        "seed": DEFAULT_SEED,
        "reps": 1_000_000,
        "alpha": 0.025,
        "sigma": 1.0,
        "n_t": 20,
        "n_c": 20,
        "n_ext": 15,
        "effect": 0.83,
    }


def _span(lo, hi, step):
    return {"start": lo, "stop": hi, "step": step}


def fig1():
    cfg = _one_arm_base("fig1")
    cfg["metrics"] = ["tie", "rmse", "w_tilde"]
    cfg["sweep"] = {
        "location": ["external_mean", "null_boundary", "current_mean"],
        "n_robust": [1.0],
        "w": [0.25, 0.5],
        "bias": _span(-2.0, 2.0, 0.1),
    }
    return cfg


def fig1_t():
    cfg = _one_arm_base("fig1-t")
    cfg["form"] = {"kind": "student_t", "df": 3.0, "scale": 1.0, "k": 100}
    cfg["metrics"] = ["tie", "rmse"]
    cfg["sweep"] = {
        "location": ["external_mean"],
        "w": [0.25, 0.5],
        "bias": _span(-2.0, 2.0, 0.1),
    }
    return cfg


def fig2():
    cfg = _one_arm_base("fig2")
    cfg["kind"] = "bimodality"
    del cfg["reps"]
    cfg["sweep"] = {
        "location": ["external_mean", "current_mean"],
        "n_robust": [1.0],
        # weight and bias grids default to 0:0.01:1 and 0:sd_ext/10:4sd_ext
    }
    return cfg


def fig4():
    cfg = _one_arm_base("fig4")
    cfg["metrics"] = ["w_tilde"]
    cfg["sweep"] = {
        "location": ["external_mean"],
        "n_robust": [1.0 / 400, 1.0 / 25, 0.25, 1.0, 2.0],
        "w": [round(0.02 * i, 10) for i in range(51)],
        "bias": [0.0, 2 * _SD_EXT, 8 * _SD_EXT],
    }
    return cfg


def fig5():
    cfg = _one_arm_base("fig5")
    cfg["metrics"] = ["w_tilde"]
    cfg["sweep"] = {
        "location": ["external_mean"],
        "n_robust": [1.0 / 400, 1.0 / 25, 0.25, 1.0, 2.0],
        "w": [0.5],
        "bias": _span(-8 * _SD_EXT, 8 * _SD_EXT, _SD_EXT / 5),
    }
    return cfg


def fig7():
    cfg = _hybrid_base("fig7")
    cfg["metrics"] = ["tie", "power", "power_calibrated"]
    cfg["sweep"] = {
        "location": ["external_mean", "current_mean"],
        "n_robust": [1.0],
        "w": [0.25, 0.5, 0.75],
        "bias": _span(-1.5, 1.5, 0.05),
    }
    return cfg


def fig8():
    cfg = _hybrid_base("fig8")
    cfg["kind"] = "sweet-spot"
    cfg["sweep"] = {
        "location": ["external_mean", "current_mean"],
        "n_robust": [1.0 / 400, 1.0 / 25, 0.25, 1.0],
        "w": [0.1, 0.25, 0.5, 0.75, 0.9],
        "bias": _span(-1.5, 1.5, 0.05),
    }
    return cfg


def fig10():
    cfg = _hybrid_base("fig10")
    cfg["kind"] = "average"
    cfg["sweep"] = {
        "location": ["external_mean", "current_mean"],
        "n_robust": [1.0],
        "w": [1.0, 0.5, 0.0],
        "design_priors": ["informative", "rmp", "unit_info"],
        "analysis_shift": _span(-1.0, 1.0, 0.1),
    }
    return cfg


def table1():
    cfg = _hybrid_base("table1")
    cfg["kind"] = "table"
    cfg["sweep"] = {
        "location": ["external_mean", "current_mean"],
        "n_robust": [1.0],
        "w": [0.5],
        "deltas": [0.1, 0.2, 0.4, 0.5],
    }
    return cfg


def a1_dispersion():
    cfg = _one_arm_base("a1-dispersion")
    cfg["metrics"] = ["tie", "power"]
    cfg["sweep"] = {
        "location": ["external_mean", "null_boundary", "current_mean"],
        "n_robust": [1.0 / 400, 1.0 / 25, 0.25, 1.0, 2.0],
        "w": [0.25, 0.5, 0.75],
        "bias": _span(-2.0, 2.0, 0.1),
    }
    return cfg


def a2_sample_size():
    cfg = _one_arm_base("a2-sample-size")
    cfg["metrics"] = ["tie"]
    cfg["sweep"] = {
        "location": ["null_boundary"],
        "n_robust": [1.0],
        "w": [0.5],
        "bias": _span(-2.0, 2.0, 0.1),
        "sample_sizes": [{"n": 10}, {"n": 20}, {"n": 50}, {"n": 100}],
    }
    return cfg


def a3_tie_size_ratios():
    cfg = _one_arm_base("a3-tie-size-ratios")
    cfg["metrics"] = ["tie"]
    cfg["sweep"] = {
        "location": ["external_mean", "null_boundary", "current_mean"],
        "n_robust": [1.0],
        "w": [0.5],
        "bias": _span(-2.0, 2.0, 0.1),
        "sample_sizes": [
            {"n": 20, "n_ext": 15},
            {"n": 20, "n_ext": 40},
            {"n": 40, "n_ext": 15},
            {"n": 100, "n_ext": 15},
        ],
    }
    return cfg


def a4_power_size_ratios():
    cfg = a3_tie_size_ratios()
    cfg["scenario_id"] = "a4-power-size-ratios"
    cfg["metrics"] = ["power"]
    return cfg


def a5_rmse_dispersion():
    cfg = _one_arm_base("a5-rmse-dispersion")
    cfg["metrics"] = ["rmse"]
    cfg["sweep"] = {
        "location": ["external_mean", "current_mean"],
        "n_robust": [1.0 / 400, 1.0 / 25, 0.25, 1.0, 2.0],
        "w": [0.25, 0.5, 0.75],
        "bias": _span(-2.0, 2.0, 0.1),
    }
    return cfg


def a7_t_components():
    cfg = _one_arm_base("a7-t-components")
    cfg["form"] = {"kind": "student_t", "df": 3.0, "scale": 1.0, "k": 100}
    cfg["metrics"] = ["tie"]
    cfg["sweep"] = {
        "location": ["external_mean"],
        "w": [0.5],
        "k": [5, 10, 25, 50, 100, 200],
        "bias": _span(0.0, 8 * _SD_EXT, _SD_EXT / 2),
    }
    return cfg


def a8_t_scale():
    cfg = _one_arm_base("a8-t-scale")
    cfg["form"] = {"kind": "student_t", "df": 3.0, "scale": 1.0, "k": 100}
    cfg["metrics"] = ["tie"]
    cfg["sweep"] = {
        "location": ["external_mean"],
        "w": [0.5],
        # 1: the df->inf normal-limit convention; sqrt(1/3): exact-variance
        # match to the unit normal; 1.5: a vaguer sensitivity point.
        "scale": [1.0, round(math.sqrt(1.0 / 3.0), 6), 1.5],
        "bias": _span(-2.0, 2.0, 0.1),
    }
    return cfg


def a13_treatment_prior():
    cfg = _hybrid_base("a13-treatment-prior")
    cfg["treatment_prior"] = "unit_info_at_external_mean"
    cfg["metrics"] = ["tie"]
    cfg["sweep"] = {
        "location": ["external_mean"],
        "n_robust": [1.0],
        "w": [0.25, 0.5, 0.75],
        "bias": _span(-3.0, 3.0, 0.1),
    }
    return cfg


def a14_treatment_prior_unbalanced():
    cfg = a13_treatment_prior()
    cfg["scenario_id"] = "a14-treatment-prior-unbalanced"
    cfg["sweep"]["sample_sizes"] = [
        {"n_t": 20, "n_c": 40},
        {"n_t": 40, "n_c": 20},
    ]
    return cfg


RECIPES = {
    "fig1": (fig1, "one-arm TIE / RMSE / posterior weight vs bias, unit-information robust component"),
    "fig1-t": (fig1_t, "one-arm TIE / RMSE with the heavy-tailed (t) robust component"),
    "fig2": (fig2, "bimodality-ratio map over prior weight and bias, both locations"),
    "fig4": (fig4, "posterior vs prior weight across dispersions at three conflict levels"),
    "fig5": (fig5, "posterior weight vs bias at prior weight 0.5 across dispersions"),
    "fig7": (fig7, "hybrid power, TIE and calibrated power vs bias"),
    "fig8": (fig8, "sweet spots across locations, dispersions and weights"),
    "fig10": (fig10, "average TIE/power over design priors with shifted analysis priors"),
    "table1": (table1, "bias-restricted max TIE and max calibrated power gain"),
    "a1-dispersion": (a1_dispersion, "one-arm TIE/power across robust dispersions"),
    "a2-sample-size": (a2_sample_size, "one-arm TIE across current sample sizes"),
    "a3-tie-size-ratios": (a3_tie_size_ratios, "one-arm TIE across current/external size ratios"),
    "a4-power-size-ratios": (a4_power_size_ratios, "one-arm power across current/external size ratios"),
    "a5-rmse-dispersion": (a5_rmse_dispersion, "standardized RMSE across dispersions and weights"),
    "a7-t-components": (a7_t_components, "TIE vs number of normal components approximating the t"),
    "a8-t-scale": (a8_t_scale, "TIE for alternative t scale conventions"),
    "a13-treatment-prior": (a13_treatment_prior, "hybrid TIE with the unit-information treatment-arm prior"),
    "a14-treatment-prior-unbalanced": (
        a14_treatment_prior_unbalanced,
        "treatment-arm prior variant with unbalanced arms",
    ),
}


def recipe_config(name: str) -> dict:
    try:
        builder, _ = RECIPES[name]
    except KeyError:
        raise KeyError(
            f"unknown recipe {name!r}; run the 'recipes' command for the list"
        ) from None
    return builder()


def list_recipes() -> str:
    width = max(len(name) for name in RECIPES)
    lines = [f"{name:<{width}}  {desc}" for name, (_, desc) in RECIPES.items()]
    return "\n".join(lines)
