"""Command line interface: experiment orchestration and result persistence.

Commands
--------
equilibrium   tabulate mean payoff, full-information payoff, incentive and
              equilibrium allocation on a regular belief grid
simulate      Monte Carlo run of a strategy profile; recorded ensemble series
payoff        long-run average payoff estimate at the prior (or --init-belief)
hjb-check     stationarity residual report for the equilibrium value field
figure1       allocation level curves on the belief simplex (default s = 6)
figure2       same as figure1 with the low safe payoff (default s = 4)
figure3       allocation along the diagonal slice for several player counts
figure4       level curves of the normal-prior model on the (mean, variance) plane
figure5       level curves of the gamma-prior model on the (mean, variance) plane
diagnostics   learning rates, convergence fits, regularity and sanity checks

Model files are JSON.  A discrete model carries states/sigma/safe_payoff/
prior/k0/n_players (see ``model.load_model``).  A conjugate-family spec
instead carries a "family" field ("normal" | "gamma") with its sufficient
statistic: mean/variance (or mean/precision) for normal, shape/rate (or
mean/variance) for gamma, plus safe_payoff, k0 and n_players.

Overrides (--safe-payoff, --n-players, --k0) are applied to the model
dictionary and revalidated before any computation runs.  Every output embeds
its fully resolved spec; JSON results parse back into the identical
``ExperimentSpec``.  CSV outputs get a ``<name>.meta.json`` sidecar carrying
the same spec echo.  All files are written atomically (temp + rename).

CSV column orders (fixed):
  equilibrium   pi_1..pi_L, mean_payoff, full_info_payoff, incentive, kappa
  simulate      time, mean_pi_1..mean_pi_L, mean_payoff, full_info_payoff,
                integrand_1..integrand_N
  payoff        player, value, se, horizon, tail_rate, tail_bound
  hjb-check     node coordinates, eq_action, residual, uncertainty, bias,
                smooth, passes
  figure1/2     pi1, pi2, incentive   (one file per polyline per level)
  figure3       p, kappa              (one file per player count)
  figure4/5     mean, variance, incentive

Figure commands write one CSV per curve into the output directory, a
``manifest.json`` with the resolved run configuration and deviation
statistics, and a rendered PNG alongside the delimited data.

Exit codes: 0 success, 1 validation error, 2 numerical failure; errors are
reported as one JSON object on stderr.  Default thread count comes from the
``LEVYBANDITS_THREADS`` environment variable; ``--threads`` overrides it.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import figures as figmod
from .conjugate import (
    GammaStat,
    NormalStat,
    conjugate_equilibrium_action,
    conjugate_incentive,
    gamma_lipschitz_report,
    normal_lipschitz_report,
)
from .equilibrium import (
    ClosedFormEquilibrium,
    ConstantStrategy,
    OffsetStrategy,
    Strategy,
    ThresholdStrategy,
    equilibrium_action,
    is_reasonable,
    lipschitz_estimate,
)
from .filtering import jump_update, learning_rates
from .hjb import build_value_field, hjb_residual_report, vertex_boundary_check
from .model import (
    LevyModel,
    ModelValidationError,
    full_info_payoff,
    incentive,
    mean_payoff,
    model_from_dict,
    simplex_grid,
    write_json_atomic,
)
from .montecarlo import (
    BeliefOverflowError,
    SimConfig,
    convergence_diagnostics,
    default_threads,
    estimate_lra_payoff,
    simulate,
)

SCHEMA_VERSION = 1

COMMANDS = (
    "equilibrium", "simulate", "payoff", "hjb-check",
    "figure1", "figure2", "figure3", "figure4", "figure5",
    "diagnostics",
)

_FIGURE_LEVELS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
_FIGURE3_N = (2, 4, 6, 8, 10)

# defaults used when a figure command is run without --model
_DEFAULT_SIMPLEX_MODEL = {
    "states": [{"rho": 2.0, "jumps": []},
               {"rho": 5.0, "jumps": []},
               {"rho": 8.0, "jumps": []}],
    "sigma": 1.0,
    "safe_payoff": 6.0,
    "prior": [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    "k0": 0.2,
    "n_players": 4,
}
_DEFAULT_NORMAL_SPEC = {
    "family": "normal", "mean": 5.0, "variance": 4.0,
    "safe_payoff": 6.0, "k0": 0.2, "n_players": 4,
}
_DEFAULT_GAMMA_SPEC = {
    "family": "gamma", "shape": 2.0, "rate": 0.5,
    "safe_payoff": 6.0, "k0": 0.2, "n_players": 4,
}


class CliValidationError(ValueError):
    """Bad arguments, bad model file, or an override violating invariants."""


# ---------------------------------------------------------------------------
# experiment spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved run description echoed into every output."""

    command: str
    model: dict
    output: str
    format: str
    grid: int
    paths: int
    dt: float
    horizon: float
    seed: int
    threads: int
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        fields = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - fields
        if extra:
            raise CliValidationError(f"spec: unknown field {sorted(extra)[0]!r}")
        missing = fields - set(data)
        if missing:
            raise CliValidationError(f"spec: missing field {sorted(missing)[0]!r}")
        return cls(**data)


def _resolve_family_spec(data: dict) -> dict:
    """Normalize a conjugate-family spec; raises on inconsistent fields."""
    fam = data.get("family")
    if fam not in ("normal", "gamma"):
        raise CliValidationError("family: must be 'normal' or 'gamma'")
    out = {"family": fam}
    try:
        if fam == "normal":
            mean = float(data["mean"])
            if "precision" in data and "variance" in data:
                raise CliValidationError("normal spec: give variance or precision, not both")
            if "precision" in data:
                var = 1.0 / float(data["precision"])
            else:
                var = float(data["variance"])
            stat = NormalStat(mean=mean, precision=1.0 / var)
            out.update(mean=stat.mean, variance=stat.variance)
        else:
            if "shape" in data or "rate" in data:
                stat = GammaStat(shape=float(data["shape"]), rate=float(data["rate"]))
            else:
                stat = GammaStat.from_mean_variance(float(data["mean"]),
                                                    float(data["variance"]))
            out.update(shape=stat.shape, rate=stat.rate)
        out["safe_payoff"] = float(data["safe_payoff"])
        out["k0"] = float(data["k0"])
        out["n_players"] = int(data["n_players"])
    except KeyError as exc:
        raise CliValidationError(f"family spec: missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise CliValidationError(f"family spec: {exc}") from exc
    if not out["k0"] > 0.0:
        raise CliValidationError("family spec: k0 must be strictly positive")
    if out["n_players"] < 1:
        raise CliValidationError("family spec: n_players must be at least 1")
    s = out["safe_payoff"]
    stat_mean = out["mean"] if fam == "normal" else out["shape"] / out["rate"]
    if fam == "gamma" and not s > 0.0:
        raise CliValidationError("family spec: gamma models need safe_payoff > 0")
    del stat_mean  # the conjugate incentive handles mean >= s (infinite incentive)
    return out


def _family_stat(spec: dict):
    if spec["family"] == "normal":
        return NormalStat(mean=spec["mean"], precision=1.0 / spec["variance"])
    return GammaStat(shape=spec["shape"], rate=spec["rate"])


def _load_model_dict(args) -> dict:
    """Model dict from --model (or per-command default), overrides applied."""
    if args.model is not None:
        try:
            with open(args.model, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise CliValidationError(f"model file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CliValidationError(f"model file: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise CliValidationError("model file: top-level value must be an object")
    elif args.command in ("figure1", "figure2", "figure3"):
        data = json.loads(json.dumps(_DEFAULT_SIMPLEX_MODEL))
        if args.command == "figure2":
            data["safe_payoff"] = 4.0
    elif args.command == "figure4":
        data = dict(_DEFAULT_NORMAL_SPEC)
    elif args.command == "figure5":
        data = dict(_DEFAULT_GAMMA_SPEC)
    else:
        raise CliValidationError(f"{args.command}: --model is required")

    if args.safe_payoff is not None:
        data["safe_payoff"] = args.safe_payoff
    if args.n_players is not None:
        data["n_players"] = args.n_players
    if args.k0 is not None:
        data["k0"] = args.k0

    if "family" in data:
        return _resolve_family_spec(data)
    try:
        return model_from_dict(data).to_dict()
    except ModelValidationError as exc:
        raise CliValidationError(str(exc)) from exc


def _require_discrete(spec_model: dict, command: str) -> LevyModel:
    if "family" in spec_model:
        raise CliValidationError(f"{command}: requires a discrete-state model, "
                                 f"got a {spec_model['family']} family spec")
    return model_from_dict(spec_model)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv_atomic(path, header, rows) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt_cell(v) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(spec: ExperimentSpec, payload: dict, header=None, rows=None) -> list:
    """Write the result as JSON or CSV (+ sidecar spec echo); returns paths."""
    envelope = {"schema_version": SCHEMA_VERSION, "spec": spec.to_dict()}
    envelope.update(payload)
    if spec.format == "json":
        write_json_atomic(spec.output, envelope)
        return [spec.output]
    if header is None:
        raise CliValidationError(f"{spec.command}: only json output is supported")
    write_csv_atomic(spec.output, header, rows)
    meta = {"schema_version": SCHEMA_VERSION, "spec": spec.to_dict()}
    meta_path = spec.output + ".meta.json"
    write_json_atomic(meta_path, meta)
    return [spec.output, meta_path]


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


# ---------------------------------------------------------------------------
# strategy profile parsing
# ---------------------------------------------------------------------------

def parse_strategy(token: str, model: LevyModel) -> Strategy:
    """One strategy from its text form.

    equilibrium | constant:<k> | offset:<delta> (relative to the equilibrium)
    | threshold:<incentive cut>
    """
    token = token.strip()
    if token == "equilibrium":
        return ClosedFormEquilibrium(model)
    kind, sep, arg = token.partition(":")
    if not sep:
        raise CliValidationError(f"strategy {token!r}: expected kind:value")
    try:
        value = float(arg)
    except ValueError as exc:
        raise CliValidationError(f"strategy {token!r}: bad numeric value") from exc
    if kind == "constant":
        try:
            return ConstantStrategy(value)
        except ValueError as exc:
            raise CliValidationError(str(exc)) from exc
    if kind == "offset":
        return OffsetStrategy(ClosedFormEquilibrium(model), value)
    if kind == "threshold":
        return ThresholdStrategy(model, value)
    raise CliValidationError(f"strategy {token!r}: unknown kind {kind!r}")


def parse_profile(text: str, model: LevyModel):
    """Comma-separated per-player strategies, or one applied to all players."""
    tokens = [t for t in text.split(",") if t.strip()]
    if len(tokens) == 1:
        strat = parse_strategy(tokens[0], model)
        return tuple([strat] * model.n_players)
    if len(tokens) != model.n_players:
        raise CliValidationError(
            f"profile: expected 1 or {model.n_players} strategies, got {len(tokens)}")
    return tuple(parse_strategy(t, model) for t in tokens)


def _parse_belief(text: str, L: int) -> np.ndarray:
    try:
        vals = np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError as exc:
        raise CliValidationError(f"init-belief: bad number in {text!r}") from exc
    if vals.shape != (L,):
        raise CliValidationError(f"init-belief: expected {L} components, got {vals.size}")
    if vals.min() < 0.0 or vals.sum() > 1.0 + 1e-12:
        raise CliValidationError("init-belief: components must be a sub-probability vector")
    return vals


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _cmd_equilibrium(spec: ExperimentSpec) -> list:
    model = _require_discrete(spec.model, "equilibrium")
    if model.L > 2:
        raise CliValidationError("equilibrium grids support up to three states")
    nodes = simplex_grid(model.L, spec.grid)
    m = mean_payoff(model, nodes)
    f = full_info_payoff(model, nodes)
    with np.errstate(divide="ignore", invalid="ignore"):
        I = incentive(model, nodes)
    kappa = equilibrium_action(model, nodes)
    header = [f"pi_{l}" for l in range(1, model.L + 1)]
    header += ["mean_payoff", "full_info_payoff", "incentive", "kappa"]
    rows = [list(nodes[i]) + [m[i], f[i], I[i], kappa[i]] for i in range(nodes.shape[0])]
    payload = {"columns": header, "rows": _json_ready(rows)}
    return _emit(spec, payload, header, rows)


def _sim_config(spec: ExperimentSpec, **extra) -> SimConfig:
    return SimConfig(
        horizon=spec.horizon, dt=spec.dt, n_paths=spec.paths, seed=spec.seed,
        threads=spec.threads, **extra,
    )


def _cmd_simulate(spec: ExperimentSpec) -> list:
    model = _require_discrete(spec.model, "simulate")
    profile = parse_profile(spec.options.get("profile", "equilibrium"), model)
    init = spec.options.get("init_belief")
    init_arr = _parse_belief(init, model.L) if init else None
    fixed_state = spec.options.get("fixed_state")
    config = _sim_config(spec, record_every=spec.options.get("record_every", 0),
                         fixed_state=fixed_state)
    ens = simulate(model, profile, config, init_belief=init_arr)

    n = model.n_players
    header = (["time"] + [f"mean_pi_{l}" for l in range(1, model.L + 1)]
              + ["mean_payoff", "full_info_payoff"]
              + [f"integrand_{i}" for i in range(1, n + 1)])
    rows = [
        [ens.times[j]] + list(ens.mean_belief[j]) + [ens.mean_m[j], ens.mean_f[j]]
        + list(ens.mean_integrand[j])
        for j in range(ens.times.size)
    ]
    summary = {
        "shortfall_mean": [ens.shortfall_mean(i) for i in range(n)],
        "shortfall_se": [ens.shortfall_se(i) for i in range(n)],
        "mean_op_time": [float(ens.op_time[:, i].mean()) for i in range(n)],
        "clip_drift": ens.clip_drift,
        "clip_events": ens.clip_events,
        "zero_prob_jumps": ens.zero_prob_jumps,
        "profile": [s.describe() for s in profile],
    }
    payload = {"columns": header, "rows": _json_ready(rows),
               "summary": _json_ready(summary)}
    return _emit(spec, payload, header, rows)


def _cmd_payoff(spec: ExperimentSpec) -> list:
    model = _require_discrete(spec.model, "payoff")
    profile = parse_profile(spec.options.get("profile", "equilibrium"), model)
    init = spec.options.get("init_belief")
    init_arr = _parse_belief(init, model.L) if init else None
    config = _sim_config(spec, record_every=0)
    ens = simulate(model, profile, config, init_belief=init_arr)
    est = estimate_lra_payoff(ens, player=0)
    header = ["player", "value", "se", "horizon", "tail_rate", "tail_bound"]
    rows = [[0, est.value, est.se, est.horizon, est.tail_rate, est.tail_bound]]
    payload = {"columns": header, "rows": _json_ready(rows),
               "estimate": _json_ready(dataclasses.asdict(est))}
    return _emit(spec, payload, header, rows)


def _cmd_hjb_check(spec: ExperimentSpec) -> list:
    model = _require_discrete(spec.model, "hjb-check")
    config = _sim_config(spec, record_every=0)
    fld = build_value_field(model, config, spec.grid)
    report = hjb_residual_report(fld, model)
    vertices = vertex_boundary_check(fld, model)
    header = ([f"pi_{l}" for l in range(1, model.L + 1)]
              + ["eq_action", "residual", "uncertainty", "bias", "smooth", "passes"])
    rows = [list(nr.pi) + [nr.eq_action, nr.residual, nr.uncertainty, nr.bias,
                           nr.smooth, nr.passes]
            for nr in report.nodes]
    summary = {
        "grid_step": report.grid_step,
        "n_paths": report.n_paths,
        "n_interior": report.n_interior,
        "n_smooth": report.n_smooth,
        "n_pass": report.n_pass,
        "pass_fraction": report.pass_fraction,
        "median_abs_residual": report.median_abs_residual,
        "argmax_consistent": report.argmax_consistent,
        "skipped_kink_nodes": report.skipped_kink_nodes,
        "passes": report.passes,
        "vertices_zero": vertices.vertices_zero,
        "edges_monotone": [e.monotone_into_vertices for e in vertices.edges],
        "boundary_passes": vertices.passes,
    }
    payload = {"columns": header, "rows": _json_ready(rows),
               "summary": _json_ready(summary)}
    return _emit(spec, payload, header, rows)


# -- figures ----------------------------------------------------------------

def _render_png(path, curve_sets, xlabel, ylabel, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    cmap = matplotlib.colormaps["viridis"]
    n = max(len(curve_sets), 1)
    for idx, (label, polys) in enumerate(curve_sets):
        color = cmap(idx / max(n - 1, 1))
        for k, poly in enumerate(polys):
            ax.plot(poly[:, 0], poly[:, 1], color=color,
                    label=label if k == 0 else None)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".png.tmp")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=150, format="png")
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)


def _figure_dir(spec: ExperimentSpec) -> str:
    out = spec.output
    os.makedirs(out, exist_ok=True)
    return out


def _emit_level_curves(spec, fig, xname, yname, png_title) -> list:
    """Per-level polyline CSVs + manifest + PNG for a level-curve figure."""
    out = _figure_dir(spec)
    ivals_fn = fig["incentive_at"]
    files = []
    curve_sets = []
    for level in fig["kappa_levels"]:
        polys = fig["curves"][level]
        curve_sets.append((f"kappa={level:g}", polys))
        for part, poly in enumerate(polys):
            name = f"kappa_{level:.2f}_part{part}.csv"
            path = os.path.join(out, name)
            ivals = ivals_fn(poly)
            rows = [[poly[i, 0], poly[i, 1], ivals[i]] for i in range(poly.shape[0])]
            write_csv_atomic(path, [xname, yname, "incentive"], rows)
            files.append(name)
    png_name = f"{spec.command}.png"
    _render_png(os.path.join(out, png_name), curve_sets, xname, yname, png_title)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "spec": spec.to_dict(),
        "columns": [xname, yname, "incentive"],
        "kappa_levels": _json_ready(list(fig["kappa_levels"])),
        "incentive_targets": _json_ready(fig["incentive_targets"]),
        "max_incentive_deviation": _json_ready(fig["max_incentive_deviation"]),
        "files": files,
        "png": png_name,
    }
    manifest_path = os.path.join(out, "manifest.json")
    write_json_atomic(manifest_path, manifest)
    return [manifest_path] + [os.path.join(out, f) for f in files]


def _cmd_figure_simplex(spec: ExperimentSpec) -> list:
    model = _require_discrete(spec.model, spec.command)
    if model.L != 2:
        raise CliValidationError(f"{spec.command}: requires a three-state model")
    fig = figmod.simplex_region_figure(model, grid_step=spec.grid,
                                       kappa_levels=_FIGURE_LEVELS)

    def incentive_at(poly):
        with np.errstate(divide="ignore", invalid="ignore"):
            return incentive(model, poly)

    fig["incentive_at"] = incentive_at
    title = f"allocation level curves, s={model.safe_payoff:g}, N={model.n_players}"
    return _emit_level_curves(spec, fig, "pi1", "pi2", title)


def _cmd_figure3(spec: ExperimentSpec) -> list:
    model = _require_discrete(spec.model, "figure3")
    if model.L != 2:
        raise CliValidationError("figure3: requires a three-state model")
    n_list = spec.options.get("n_list") or list(_FIGURE3_N)
    fig = figmod.diagonal_slice_figure(model, n_list=n_list, grid_step=spec.grid)
    out = _figure_dir(spec)
    files = []
    curve_sets = []
    p = fig["p"]
    for n in fig["n_list"]:
        name = f"diagonal_N{n:02d}.csv"
        rows = [[p[i], fig["curves"][n][i]] for i in range(p.size)]
        write_csv_atomic(os.path.join(out, name), ["p", "kappa"], rows)
        files.append(name)
        curve_sets.append((f"N={n}", [np.column_stack([p, fig["curves"][n]])]))
    png_name = "figure3.png"
    _render_png(os.path.join(out, png_name), curve_sets, "p", "kappa",
                "diagonal-slice allocation by player count")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "spec": spec.to_dict(),
        "columns": ["p", "kappa"],
        "n_list": fig["n_list"],
        "threshold": _json_ready(fig["threshold"]),
        "files": files,
        "png": png_name,
    }
    manifest_path = os.path.join(out, "manifest.json")
    write_json_atomic(manifest_path, manifest)
    return [manifest_path] + [os.path.join(out, f) for f in files]


def _cmd_figure_conjugate(spec: ExperimentSpec) -> list:
    fam = "normal" if spec.command == "figure4" else "gamma"
    model = spec.model
    if "family" not in model:
        raise CliValidationError(
            f"{spec.command}: requires a {fam} family spec, got a discrete model")
    if model["family"] != fam:
        raise CliValidationError(
            f"{spec.command}: requires a {fam} family spec, got {model['family']}")
    s = model["safe_payoff"]
    means = np.linspace(0.5 if fam == "gamma" else s - 6.0, s + 4.0, spec.grid + 1)
    variances = np.linspace(0.05, 20.0, spec.grid)
    fig = figmod.mean_variance_figure(fam, s=s, n_players=model["n_players"],
                                      k0=model["k0"], means=means, variances=variances,
                                      kappa_levels=_FIGURE_LEVELS)

    if fam == "normal":
        def incentive_at(poly):
            return np.array([conjugate_incentive(
                NormalStat(mean=mv[0], precision=1.0 / mv[1]), s) for mv in poly])
    else:
        def incentive_at(poly):
            return np.array([conjugate_incentive(
                GammaStat.from_mean_variance(mv[0], mv[1]), s) for mv in poly])

    fig["incentive_at"] = incentive_at
    title = f"{fam} model level curves, s={s:g}, N={model['n_players']}"
    return _emit_level_curves(spec, fig, "mean", "variance", title)


# -- diagnostics ------------------------------------------------------------

def _discrete_diagnostics(spec: ExperimentSpec, model: LevyModel) -> dict:
    report: dict = {"model_kind": "discrete", "n_states": model.n_states}

    if model.L == 1:
        lr = learning_rates(model)
        report["learning"] = {
            "eta0": lr.eta0, "eta1": lr.eta1,
            "identify_rate0": lr.identify_rate0,
            "identify_rate1": lr.identify_rate1,
        }
        # fitted convergence under all-risky play, one run per state
        conv = {}
        config = _sim_config(spec, record_every=max(1, int(round(0.01 / spec.dt))))
        for state in (0, 1):
            config_state = dataclasses.replace(config, fixed_state=state)
            ens = simulate(model, ConstantStrategy(1.0), config_state)
            rep = convergence_diagnostics(model, ens)
            conv[str(state)] = {
                "rate_mean_log": rep.rate_mean_log,
                "rate_log_mean": rep.rate_log_mean,
                "eta": rep.eta,
                "identify_rate": rep.identify_rate,
                "threshold": rep.threshold,
                "passes": rep.passes,
            }
        report["convergence"] = conv

    if model.atom_sizes.size:
        table = []
        pi0 = model.prior_free
        m0 = float(mean_payoff(model, pi0))
        for h in model.atom_sizes:
            post = jump_update(model, pi0, float(h))
            m1 = float(mean_payoff(model, post))
            table.append({
                "size": float(h),
                "posterior": _json_ready(post),
                "direction": "up" if m1 > m0 else ("down" if m1 < m0 else "flat"),
            })
        report["jump_updates"] = table

    strat = ClosedFormEquilibrium(model)
    grids = (spec.grid, 2 * spec.grid)
    report["lipschitz"] = {
        "kind": "simplex",
        "grid_steps": list(grids),
        "estimates": [lipschitz_estimate(strat, model.L, g) for g in grids],
    }
    ok, witness = is_reasonable(model, strat)
    report["reasonable"] = {"passes": bool(ok),
                            "witness": _json_ready(witness) if witness is not None else None}
    return report


def _conjugate_diagnostics(spec: ExperimentSpec, model: dict) -> dict:
    stat = _family_stat(model)
    s = model["safe_payoff"]
    report = {
        "model_kind": model["family"],
        "incentive": _json_ready(conjugate_incentive(stat, s)),
        "equilibrium_action": _json_ready(conjugate_equilibrium_action(
            stat, s, model["k0"], model["n_players"])),
    }
    band = (0.05, model["k0"] + model["n_players"])
    if model["family"] == "normal":
        rep = normal_lipschitz_report(band, tau0=1.0 / model["variance"])
    else:
        rep = gamma_lipschitz_report(model["shape"], band, s)
    report["lipschitz"] = {"kind": model["family"],
                           **_json_ready(dataclasses.asdict(rep))}
    return report


def _cmd_diagnostics(spec: ExperimentSpec) -> list:
    if spec.format != "json":
        raise CliValidationError("diagnostics: only json output is supported")
    if "family" in spec.model:
        payload = {"report": _json_ready(_conjugate_diagnostics(spec, spec.model))}
    else:
        model = model_from_dict(spec.model)
        payload = {"report": _json_ready(_discrete_diagnostics(spec, model))}
    return _emit(spec, payload)


_DISPATCH = {
    "equilibrium": _cmd_equilibrium,
    "simulate": _cmd_simulate,
    "payoff": _cmd_payoff,
    "hjb-check": _cmd_hjb_check,
    "figure1": _cmd_figure_simplex,
    "figure2": _cmd_figure_simplex,
    "figure3": _cmd_figure3,
    "figure4": _cmd_figure_conjugate,
    "figure5": _cmd_figure_conjugate,
    "diagnostics": _cmd_diagnostics,
}


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 on bad arguments, not argparse's 2
        raise CliValidationError(message)


_GRID_DEFAULTS = {
    "equilibrium": 200, "hjb-check": 40,
    "figure1": 200, "figure2": 200, "figure3": 400, "figure4": 200, "figure5": 200,
}
_HORIZON_DEFAULTS = {"hjb-check": 8.0}
_FORMAT_DEFAULTS = {
    "equilibrium": "csv", "simulate": "json", "payoff": "json",
    "hjb-check": "json", "diagnostics": "json",
}


def build_parser() -> _Parser:
    parser = _Parser(prog="levybandits",
                     description="strategic experimentation laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, description=f"run the {name} command")
        p.add_argument("--model", help="model JSON file")
        p.add_argument("--out", help="output file (or directory for figures)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--safe-payoff", "-s", type=float, default=None, dest="safe_payoff")
        p.add_argument("--n-players", type=int, default=None, dest="n_players")
        p.add_argument("--k0", type=float, default=None)
        p.add_argument("--grid", type=int, default=None)
        p.add_argument("--paths", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--horizon", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        if name in ("simulate", "payoff"):
            p.add_argument("--profile", default="equilibrium",
                           help="strategy per player: equilibrium | constant:<k> | "
                                "offset:<d> | threshold:<cut> (comma-separated)")
            p.add_argument("--init-belief", default=None, dest="init_belief")
        if name == "simulate":
            p.add_argument("--fixed-state", type=int, default=None, dest="fixed_state")
            p.add_argument("--record-every", type=int, default=0, dest="record_every")
        if name == "figure3":
            p.add_argument("--players-list", default=None, dest="players_list",
                           help="comma-separated player counts (default 2,4,6,8,10)")
    return parser


def resolve_spec(args) -> ExperimentSpec:
    model_dict = _load_model_dict(args)
    command = args.command
    fmt = args.format or _FORMAT_DEFAULTS.get(command, "csv")
    is_figure = command.startswith("figure")
    if is_figure and args.format == "json":
        raise CliValidationError(f"{command}: emits csv curves plus a json manifest; "
                                 f"--format is not applicable")
    default_out = command if is_figure else f"{command}.{fmt}"
    out = args.out or default_out

    grid = args.grid if args.grid is not None else _GRID_DEFAULTS.get(command, 100)
    if grid < 2:
        raise CliValidationError("grid: must be at least 2")
    paths = args.paths if args.paths is not None else 10_000
    if paths < 1:
        raise CliValidationError("paths: must be positive")
    dt = args.dt if args.dt is not None else 1e-3
    if not dt > 0:
        raise CliValidationError("dt: must be strictly positive")
    horizon = args.horizon if args.horizon is not None else _HORIZON_DEFAULTS.get(command, 10.0)
    if not horizon > 0:
        raise CliValidationError("horizon: must be strictly positive")
    seed = args.seed if args.seed is not None else 0
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise CliValidationError("threads: must be at least 1")

    options = {}
    if command in ("simulate", "payoff"):
        options["profile"] = args.profile
        if args.init_belief:
            options["init_belief"] = args.init_belief
    if command == "simulate":
        if args.fixed_state is not None:
            options["fixed_state"] = args.fixed_state
        options["record_every"] = args.record_every
    if command == "figure3" and args.players_list:
        try:
            options["n_list"] = [int(t) for t in args.players_list.split(",") if t.strip()]
        except ValueError as exc:
            raise CliValidationError(f"players-list: {exc}") from exc

    return ExperimentSpec(
        command=command, model=model_dict, output=out, format=fmt,
        grid=grid, paths=paths, dt=dt, horizon=horizon, seed=seed,
        threads=threads, options=options,
    )


def run(spec: ExperimentSpec) -> list:
    """Execute a resolved spec; returns the list of files written."""
    return _DISPATCH[spec.command](spec)


def _error_json(kind: str, exc: BaseException) -> str:
    doc = {"error": kind, "message": str(exc)}
    if isinstance(exc, BeliefOverflowError):
        doc.update(seed=exc.seed, chunk=exc.chunk_index, step=exc.step,
                   run=exc.run_index, path=exc.path_index)
    return json.dumps(doc)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        spec = resolve_spec(args)
        written = run(spec)
    except (BeliefOverflowError, ArithmeticError, FloatingPointError) as exc:
        print(_error_json("numerical", exc), file=sys.stderr)
        return 2
    except (ValueError, NotImplementedError) as exc:
        # CliValidationError and ModelValidationError are ValueError subclasses
        print(_error_json("validation", exc), file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
