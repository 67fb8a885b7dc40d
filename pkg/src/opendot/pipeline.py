"""Scenario orchestration and persistence.

Stages run in a fixed order (validate, levels, perturb, poles, dispersion,
strongfield).  Each writes one CSV; a JSON summary holds the whole
:class:`ResultBundle`.  Every CSV row carries the hash of the configuration
that produced it, floats are written with 17 significant digits and rows are
ordered deterministically, so identical configurations give byte-identical
tables.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import STAGES, RunConfig
from .errors import ConfigError, MissingColumnsError
from .perturbation import EMBEDDED, LevelRecord, ResonanceProblem, prepare_problem, resonance_estimate
from .potentials import validate_assumptions
from .scaling import pole_shift, theta_independence
from .spectral import solve_longitudinal
from .strong_field import (default_direct_grids, direct_ground_state, discrete_fiber_bottom,
                           dispersion_curve, essential_bottom, variational_certificate)

WORKERS_ENV = "OPENDOT_WORKERS"
FAILED_MARKER = "FAILED"

COLUMN_DOCS = {
    "config_hash": ("-", "hash of the validated configuration"),
    "level": ("-", "level label n<n>j<j>"),
    "n": ("count", "longitudinal bound-state index"),
    "j": ("count", "transverse mode index"),
    "mu_n": ("energy", "longitudinal eigenvalue"),
    "nu_j": ("energy", "transverse threshold"),
    "e0": ("energy", "unperturbed level mu_n + nu_j"),
    "status": ("-", "isolated | embedded | threshold-collision | degenerate"),
    "k_open": ("count", "number of open channels at e0"),
    "B": ("field", "magnetic field (units hbar = 2m = e = 1)"),
    "lambda": ("-", "dot coupling constant"),
    "e1": ("energy", "first-order shift"),
    "Re_e2": ("energy", "real part of the second-order term"),
    "Im_e2": ("energy", "golden-rule imaginary part of e2"),
    "Im_e2_resolvent": ("energy", "imaginary part of e2 from the regularized resolvent"),
    "pred_re": ("energy", "Re(e0 + e1 + e2)"),
    "pred_im": ("energy", "Im(e0 + e1 + e2)"),
    "pole_re": ("energy", "real part of the complex-scaling pole"),
    "pole_im": ("energy", "imaginary part of the complex-scaling pole"),
    "pole_err": ("energy", "|fine - coarse| grid estimate"),
    "theta_imag": ("rad", "imaginary part of the scaling parameter"),
    "K": ("count", "channel truncation"),
    "n_points": ("count", "longitudinal grid points"),
    "p": ("momentum", "longitudinal momentum"),
    "nu1Bp": ("energy", "lowest fiber eigenvalue nu_1^B(p)"),
    "p0": ("momentum", "minimizer of nu_1^B"),
    "n_minimizers": ("count", "number of global minimizers"),
    "essential_bottom": ("energy", "min_p nu_1^B(p)"),
    "discrete_bottom": ("energy", "same for the x-discretized fiber of the 2D oracle"),
    "attractivity": ("energy*length", "int U_11(x; p0) dx"),
    "eps": ("-", "trial stretch parameter"),
    "d": ("length", "trial plateau half-length"),
    "q": ("energy", "reduced quadratic form at (eps, d)"),
    "full_form": ("energy", "unreduced quadratic form at (eps, d)"),
    "form_difference": ("energy", "full_form - q"),
    "verdict": ("-", "certified | inconclusive"),
    "direct_eigenvalue": ("energy", "lowest eigenvalue of the 2D discretization"),
}

PLOT_KINDS = {
    "loglog-width": (("B", "Im_e2", "pole_im"),
                     "# log10(B) [field]  log10|Im e2| [energy]  log10|Im pole| [energy]"),
    "dispersion": (("p", "nu1Bp"), "# p [momentum]  nu_1^B(p) [energy]"),
    "pole-trajectory": (("B", "pole_re", "pole_im"), "# B [field]  Re pole [energy]  Im pole [energy]"),
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _clean(value):
    """JSON-native copy: complex -> [re, im], non-finite floats -> None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [_clean(float(value.real)), _clean(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def require(self, names) -> None:
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise MissingColumnsError(f"table {self.name!r} lacks columns {missing}")

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(v) for v in r])

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, _clean(r))) for r in self.rows]

    @classmethod
    def read_csv(cls, path: Path) -> "Table":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        cols, body = rows[0], rows[1:]

        def conv(s):
            try:
                return float(s)
            except ValueError:
                return s
        return cls(Path(path).stem, cols, [[conv(v) for v in r] for r in body])


@dataclass
class ResultBundle:
    scenario: str
    timestamp: str
    config_hash: str
    stages: list[str] = field(default_factory=list)
    assumptions: dict | None = None
    levels: list[dict] = field(default_factory=list)
    estimates: list[dict] = field(default_factory=list)
    poles: list[dict] = field(default_factory=list)
    drift: list[dict] = field(default_factory=list)
    dispersion: list[dict] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    failed_stage: str | None = None
    failure: str | None = None

    def to_json(self) -> str:
        return json.dumps(_clean(asdict(self)), indent=1, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "ResultBundle":
        return cls(**json.loads(text))


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items: list) -> list:
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class ScenarioState:
    cfg: RunConfig
    problem: ResonanceProblem | None = None
    levels: list[LevelRecord] = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    baselines: dict = field(default_factory=dict)

    def ensure_problem(self) -> ResonanceProblem:
        if self.problem is None:
            cfg = self.cfg
            s = cfg.solver
            self.problem = prepare_problem(cfg.model, cfg.x_grid(), cfg.y_grid(), s["J"],
                                           nystrom_max_nodes=s["nystrom_max_nodes"])
            self.problem.near_threshold = float(s["near_threshold"])
            self.levels = self.problem.levels(float(s["energy_cap"]), float(s["threshold_tol"]))
        return self.problem

    @property
    def embedded(self) -> list[LevelRecord]:
        self.ensure_problem()
        return [lv for lv in self.levels if lv.status == EMBEDDED]

    def channels(self, level: LevelRecord) -> int:
        K = self.cfg.solver["K"]
        return K if K is not None else min(level.k_open + 3, self.cfg.solver["J"])


def _couplings(cfg: RunConfig) -> list[tuple[float, float]]:
    return [(B, lam) for B in cfg.sweep["B"] for lam in cfg.sweep["lambda"]]


def stage_levels(state: ScenarioState, bundle: ResultBundle) -> Table:
    prob = state.ensure_problem()
    h = state.cfg.config_hash
    t = Table("levels", ["config_hash", "level", "n", "j", "mu_n", "nu_j", "e0", "status", "k_open"])
    for lv in state.levels:
        t.rows.append([h, lv.label, lv.n, lv.j, prob.mu[lv.n - 1], prob.nu[lv.j - 1], lv.e0,
                       lv.status, lv.k_open])
    bundle.levels = t.records()
    coarse = solve_longitudinal(state.cfg.model, prob.x_grid.coarsened())
    if coarse and len(coarse) == len(prob.longitudinal):
        diff = max(abs(a.eigenvalue - b.eigenvalue) for a, b in zip(coarse, prob.longitudinal))
        bundle.provenance["mu_grid_change"] = diff
    return t


def _estimate_rows(state: ScenarioState, level: LevelRecord, pairs, h: str) -> list[list]:
    prob = state.ensure_problem()
    rows = []
    for B, lam in pairs:
        est = resonance_estimate(prob, level, B, lam, channels=state.channels(level))
        pred = est.predicted_pole
        rows.append([h, level.label, level.n, level.j, B, lam, level.e0, est.e1, est.e2.real,
                     est.e2.imag, est.im_e2_resolvent, pred.real, pred.imag])
    return rows


WIDTH_COLUMNS = ["config_hash", "level", "n", "j", "B", "lambda", "e0", "e1", "Re_e2", "Im_e2",
                 "Im_e2_resolvent", "pred_re", "pred_im"]
POLE_COLUMNS = ["config_hash", "level", "n", "j", "B", "lambda", "e0", "pole_re", "pole_im",
                "pole_err", "theta_imag", "K", "n_points"]


def stage_perturb(state: ScenarioState, bundle: ResultBundle) -> Table:
    h = state.cfg.config_hash
    t = Table("widths", list(WIDTH_COLUMNS))
    for level in state.embedded:
        t.rows.extend(_estimate_rows(state, level, _couplings(state.cfg), h))
    bundle.estimates = t.records()
    return t


def _pole_job(args):
    model, modes, grid, e0, theta, B, lam, K, radius, baseline = args
    res, _ = pole_shift(model, modes, grid, e0, theta, B, lam, K, radius, baseline)
    return res


def _pole_rows(state: ScenarioState, level: LevelRecord, pairs, h: str) -> list[list]:
    cfg = state.cfg
    prob = state.ensure_problem()
    K = state.channels(level)
    radius = float(cfg.solver["search_radius"])
    key = (level.n, level.j, K)
    if key not in state.baselines:
        _, state.baselines[key] = pole_shift(cfg.model, prob.modes, prob.x_grid, level.e0, cfg.theta,
                                             0.0, 0.0, K, radius)
    base = state.baselines[key]
    jobs = [(cfg.model, prob.modes, prob.x_grid, level.e0, cfg.theta, B, lam, K, radius, base)
            for B, lam in pairs]
    rows = []
    for (B, lam), res in zip(pairs, _map(_pole_job, jobs)):
        rows.append([h, level.label, level.n, level.j, B, lam, level.e0, res.pole.real, res.pole.imag,
                     res.discretization_error, cfg.theta.imag, K, res.n_points])
    return rows


def stage_poles(state: ScenarioState, bundle: ResultBundle) -> Table:
    cfg = state.cfg
    h = cfg.config_hash
    t = Table("poles", list(POLE_COLUMNS))
    prob = state.ensure_problem()
    pairs = _couplings(cfg)
    for level in state.embedded:
        t.rows.extend(_pole_rows(state, level, pairs, h))
        B, lam = max(pairs, key=lambda bl: abs(bl[0]) + abs(bl[1]))
        rep = theta_independence(cfg.model, prob.modes, prob.x_grid, level.e0,
                                 [complex(cfg.theta.real, b) for b in cfg.solver["theta_set"]],
                                 B, lam, state.channels(level), float(cfg.solver["search_radius"]))
        bundle.drift.append(_clean({"level": level.label, "B": B, "lambda": lam, "drift": rep.drift,
                                    "tolerance": rep.tolerance, "accepted": rep.accepted,
                                    "poles": rep.poles, "notes": rep.notes}))
    bundle.poles = t.records()
    return t


def _p_range(cfg: RunConfig):
    pr = cfg.sweep["p_range"]
    return tuple(pr) if pr is not None else None


def stage_dispersion(state: ScenarioState, bundle: ResultBundle) -> Table:
    cfg = state.cfg
    h = cfg.config_hash
    t = Table("dispersion", ["config_hash", "B", "p", "nu1Bp"])
    yg = cfg.y_grid()
    for B in cfg.strong["B"]:
        curve = dispersion_curve(cfg.model, B, 1, yg, _p_range(cfg), cfg.sweep["p_samples"])
        for p, v in zip(curve.p, curve.values):
            t.rows.append([h, B, float(p), float(v)])
    bundle.dispersion = t.records()
    return t


STRONG_COLUMNS = ["config_hash", "B", "p0", "n_minimizers", "essential_bottom", "discrete_bottom",
                  "attractivity", "eps", "d", "q", "full_form", "form_difference", "verdict",
                  "direct_eigenvalue"]


def certify_field(cfg: RunConfig, B: float):
    """Dispersion minimum, certificate and (optionally) the 2D oracle at one field."""
    st = cfg.strong
    yg = cfg.y_grid()
    curve = dispersion_curve(cfg.model, B, 1, yg, _p_range(cfg), cfg.sweep["p_samples"])
    bottom, p0 = essential_bottom(curve)
    cert = variational_certificate(cfg.model, B, p0[0], yg, float(st["lambda"]), st["eps"], st["d"],
                                   bottom=bottom)
    discrete = None
    if st["direct"]:
        xg, yg2 = default_direct_grids(cfg.model, float(st["direct_L"]), st["direct_n"],
                                       float(cfg.grid["L_transverse"]))
        cert.direct_eigenvalue = direct_ground_state(cfg.model, B, xg, yg2, float(st["lambda"]))
        discrete = discrete_fiber_bottom(cfg.model, B, yg2, xg.h)
    return curve, p0, cert, discrete


def stage_strongfield(state: ScenarioState, bundle: ResultBundle) -> Table:
    cfg = state.cfg
    h = cfg.config_hash
    t = Table("strongfield", list(STRONG_COLUMNS))
    results = _map(_certify_job, [(cfg, B) for B in cfg.strong["B"]])
    for B, (curve, p0, cert, discrete) in zip(cfg.strong["B"], results):
        t.rows.append([h, B, cert.p0, len(p0), cert.essential_bottom, discrete, cert.attractivity,
                       cert.eps, cert.d, cert.q_value, cert.full_form, cert.form_difference,
                       cert.verdict, cert.direct_eigenvalue])
        d = cert.to_dict()
        d["minimizers"] = p0
        d["discrete_bottom"] = discrete
        bundle.certificates.append(_clean(d))
    return t


def _certify_job(args):
    cfg, B = args
    return certify_field(cfg, B)


STAGE_FUNCS = {
    "levels": stage_levels,
    "perturb": stage_perturb,
    "poles": stage_poles,
    "dispersion": stage_dispersion,
    "strongfield": stage_strongfield,
}


def write_schema(path: Path, tables: list[Table]) -> None:
    schema = {t.name: [{"name": c, "unit": COLUMN_DOCS.get(c, ("-", ""))[0],
                        "description": COLUMN_DOCS.get(c, ("-", ""))[1]} for c in t.columns]
              for t in tables}
    path.write_text(json.dumps(schema, indent=1, sort_keys=True) + "\n")


def emit_plot_data(table: Table, kind: str, path: Path) -> Path:
    """Whitespace-separated columns with a header naming axes and units."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}")
    cols, header = PLOT_KINDS[kind]
    table.require(cols)
    data = np.array([[float(v) if v not in ("", None) else np.nan for v in table.column(c)] for c in cols]).T
    if kind == "loglog-width":
        with np.errstate(divide="ignore", invalid="ignore"):
            data = np.log10(np.abs(data))
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")
    return path


def _merged_width_table(widths: Table, poles: Table) -> Table:
    key = lambda r, t: (r[t.columns.index("level")], r[t.columns.index("B")], r[t.columns.index("lambda")])  # noqa: E731
    pole_map = {key(r, poles): r for r in poles.rows}
    out = Table("width_vs_pole", ["level", "B", "lambda", "Im_e2", "pole_re", "pole_im"])
    for r in widths.rows:
        p = pole_map.get(key(r, widths))
        if p is None:
            continue
        out.rows.append([r[1], r[4], r[5], r[widths.columns.index("Im_e2")],
                         p[poles.columns.index("pole_re")], p[poles.columns.index("pole_im")]])
    return out


def run_scenario(cfg: RunConfig, out_dir: str | Path | None = None,
                 stages: list[str] | None = None) -> ResultBundle:
    """Run the named stages, write tables and the summary, return the bundle.

    On a stage failure the tables of completed stages are kept, a ``FAILED``
    marker names the failing stage and the error propagates.
    """
    stages = list(cfg.stages if stages is None else stages)
    bad = [s for s in stages if s not in STAGES]
    if bad:
        raise ConfigError(f"unknown stages {bad}")
    stages = [s for s in STAGES if s in stages]
    out = Path(out_dir if out_dir is not None else cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    bundle = ResultBundle(cfg.scenario, datetime.now(timezone.utc).isoformat(), cfg.config_hash, stages)
    bundle.provenance = {"config_hash": cfg.config_hash, "source": cfg.source,
                         "x_grid": [cfg.grid["L"], cfg.grid["n"]],
                         "y_points": cfg.y_grid().n_points}
    state = ScenarioState(cfg)
    fmts = cfg.output["formats"]
    tables: list[Table] = []
    marker = out / FAILED_MARKER
    if marker.exists():
        marker.unlink()
    try:
        for stage in stages:
            try:
                if stage == "validate":
                    rep = validate_assumptions(cfg.model)
                    bundle.assumptions = _clean(rep.to_dict())
                    (out / "assumptions.json").write_text(
                        json.dumps(bundle.assumptions, indent=1, sort_keys=True) + "\n")
                    continue
                table = STAGE_FUNCS[stage](state, bundle)
            except Exception as exc:
                bundle.failed_stage = stage
                bundle.failure = f"{type(exc).__name__}: {exc}"
                marker.write_text(f"stage {stage} failed\n{bundle.failure}\n")
                raise
            tables.append(table)
            if "csv" in fmts:
                table.to_csv(out / f"{table.name}.csv")
        _emit_plots(cfg, tables, out)
    finally:
        if bundle.poles:
            errs = [p["pole_err"] for p in bundle.poles if p.get("pole_err") is not None]
            bundle.provenance["pole_grid_error_max"] = max(errs) if errs else None
        if tables and "csv" in fmts:
            write_schema(out / "schema.json", tables)
        if "json" in fmts:
            (out / "summary.json").write_text(bundle.to_json() + "\n")
    return bundle


def _emit_plots(cfg: RunConfig, tables: list[Table], out: Path) -> None:
    if not cfg.output["plots"]:
        return
    by_name = {t.name: t for t in tables}
    if "widths" in by_name and "poles" in by_name:
        merged = _merged_width_table(by_name["widths"], by_name["poles"])
        emit_plot_data(merged, "loglog-width", out / "width_loglog.dat")
    if "poles" in by_name:
        emit_plot_data(by_name["poles"], "pole-trajectory", out / "pole_trajectory.dat")
    if "dispersion" in by_name:
        emit_plot_data(by_name["dispersion"], "dispersion", out / "dispersion.dat")


def sweep(cfg: RunConfig, axis: str, values, fixed: float = 0.0) -> Table:
    """Long-format table over one axis.

    ``B`` and ``lambda`` sweeps hold the other coupling at ``fixed`` and give
    one row per (value, embedded level) with the series and the pole.  A
    ``p`` sweep tabulates ``nu_1^B(p)`` for every strong-field B.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    if any(b < a for a, b in zip(values[:-1], values[1:])):
        raise ConfigError("sweep values must be sorted ascending")
    h = cfg.config_hash
    if axis == "p":
        from .spectral import solve_fiber
        t = Table("sweep_p", ["config_hash", "B", "p", "nu1Bp"])
        yg = cfg.y_grid()
        for B in cfg.strong["B"]:
            for p in values:
                t.rows.append([h, B, p, solve_fiber(cfg.model, B, p, yg, 1)[0].eigenvalue])
        return t
    if axis not in ("B", "lambda"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    pairs = [(v, fixed) if axis == "B" else (fixed, v) for v in values]
    state = ScenarioState(cfg)
    cols = ["config_hash", "level", "n", "j", "B", "lambda", "e0", "e1", "Re_e2", "Im_e2",
            "pred_re", "pred_im", "pole_re", "pole_im", "pole_err"]
    t = Table(f"sweep_{axis}", cols)
    for level in state.embedded:
        est = _estimate_rows(state, level, pairs, h)
        poles = _pole_rows(state, level, pairs, h)
        for e, p in zip(est, poles):
            t.rows.append(e[:10] + e[11:13] + p[7:10])
    return t

