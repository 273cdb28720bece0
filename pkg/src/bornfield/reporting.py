"""Execute a :class:`RunConfig` and write its artifacts.

Bulk series go to CSV, summaries to JSON.  Every JSON artifact has the form
``{"config": <resolved config>, "result": {...}}``.  Floats are written with
``repr``, the shortest string that round-trips, so artifacts are byte-stable.
"""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, dumps
from .detection_mc import detection_energy, infer_amplitude, sample_counts
from .energy_audit import AuditConfig, run_audit, sweep
from .fock_space import OperatorKind, build_operator, coherent_state, expectation
from .maxwell_fdtd import FieldGrid, Region, init_grid, run_ledger, steps_for
from .probability_rules import apply_rule, pmf_moments


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


class Artifacts:
    """Collects named artifacts, then writes those matching the format."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.files: dict[str, str] = {}

    def json(self, name: str, result: dict):
        if self.config.format in ("json", "both"):
            self.files[name + ".json"] = dumps({"config": self.config.to_dict(), "result": result})

    def csv(self, name: str, header: list[str], rows):
        if self.config.format in ("csv", "both"):
            self.files[name + ".csv"] = csv_text(header, rows)

    def write(self, out_dir: str | os.PathLike) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.files.items():
            p = out / name
            p.write_text(text, encoding="utf-8", newline="")
            paths.append(p)
        return paths


def _coherent(cfg: RunConfig, art: Artifacts):
    state = coherent_state(cfg.alpha, cfg.n_max, cfg.trunc_tol)
    n_op = build_operator(OperatorKind.NUMBER, state.n_max)
    x_op = build_operator(OperatorKind.QUADRATURE, state.n_max)
    mean_n = expectation(state, n_op)
    mean_x = expectation(state, x_op)
    art.json("coherent", {
        "n_max": state.n_max,
        "truncation_deficit": state.truncation_deficit,
        "truncation_ok": state.truncation_ok,
        "mean_n": mean_n.real,
        "mean_n_imag": mean_n.imag,
        "mean_x": mean_x.real,
        "mean_x_imag": mean_x.imag,
        "coefficients": [[c.real, c.imag] for c in state.coeffs.tolist()],
    })
    probs = np.abs(state.coeffs) ** 2
    art.csv("coherent", ["n", "re", "im", "prob"],
            ([n, c.real, c.imag, float(p)] for n, (c, p) in enumerate(zip(state.coeffs.tolist(), probs))))


def _detect(cfg: RunConfig, art: Artifacts):
    state = coherent_state(cfg.alpha, cfg.n_max, cfg.trunc_tol)
    pmf = apply_rule(state, cfg.rule)
    rec = sample_counts(pmf, cfg.n_samples, cfg.seed)
    amp, amp_err = infer_amplitude(rec)
    mean, var = pmf_moments(pmf)
    summary = rec.summary()
    summary.update(
        amp=amp,
        amp_err=amp_err,
        energy=detection_energy(rec, omega=cfg.hbar_omega, hbar=1.0),
        pmf_mean=mean,
        pmf_variance=var,
        truncation_deficit=state.truncation_deficit,
    )
    art.json("detect", summary)
    art.csv("detect", ["count"], ([int(n)] for n in rec.counts.tolist()))


def _region(cfg: RunConfig, grid: FieldGrid) -> Region | None:
    if cfg.region is None:
        return None
    return Region(int(round(cfg.region[0] * grid.cells)), int(round(cfg.region[1] * grid.cells)))


def _fdtd(cfg: RunConfig, art: Artifacts):
    grid = init_grid(cfg.grid)
    final, ledger = run_ledger(grid, steps_for(cfg.grid), _region(cfg, grid))
    summary = ledger.summary()
    summary.update(dx=grid.dx, dt=grid.dt, sigma=grid.sigma.tolist())
    art.json("fdtd", summary)
    header = ["step", "time", "field_energy", "mech_work", "absorbed", "flux_integral", "residual"]
    art.csv("fdtd_ledger", header, ([r[k] for k in header] for r in ledger.rows()))
    b = final.B.tolist() + [""]
    xb = final.x_b.tolist() + [""]
    art.csv("fdtd_fields", ["node", "x_e", "E", "sigma", "x_b", "B"],
            ([i, xe, e, s, xbb, bb] for i, (xe, e, s, xbb, bb) in
             enumerate(zip(final.x_e.tolist(), final.E.tolist(), final.sigma.tolist(), xb, b))))


def _audit_config(cfg: RunConfig, rule=None) -> AuditConfig:
    return AuditConfig(
        alpha=cfg.alpha,
        rule=cfg.rule if rule is None else rule,
        n_max=cfg.n_max,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        hbar_omega=cfg.hbar_omega,
        grid=cfg.grid,
        region=cfg.region,
        closure_tol=cfg.closure_tol,
        threshold=cfg.threshold,
        scenario=cfg.scenario,
    )


_AUDIT_COLUMNS = ["scenario", "kappa", "kappa_mc", "kappa_mc_stderr", "absorbed", "reported_absorbed",
                  "discretization_error", "statistical_error", "violation_magnitude",
                  "violation_significance", "mc_violation", "mc_significance", "mc_consistent", "status"]


def _audit(cfg: RunConfig, art: Artifacts):
    report = run_audit(_audit_config(cfg))
    d = report.to_dict()
    art.json("audit", d)
    art.csv("audit", _AUDIT_COLUMNS, [[d[k] for k in _AUDIT_COLUMNS]])
    return report


def _sweep(cfg: RunConfig, art: Artifacts):
    if cfg.rule.kind == "born":
        raise ConfigError("sweep needs rule.kind = power_deformed or additive", "rule.kind")
    result = sweep(cfg.rule, cfg.sweep_values, _audit_config(cfg), workers=cfg.sweep_workers)
    art.json("sweep", result.to_dict())
    header = ["parameter", "kappa", "kappa_mc", "violation", "significance", "status"]
    art.csv("sweep", header, ([r[k] for k in header] for r in result.rows()))
    return result


_RUNNERS = {"coherent": _coherent, "detect": _detect, "fdtd": _fdtd, "audit": _audit, "sweep": _sweep}


def run_command(cfg: RunConfig, out_dir: str | os.PathLike | None = None) -> list[Path]:
    """Run ``cfg.command`` and write its artifacts; returns the written paths.

    Errors propagate; :mod:`bornfield.cli` maps them to exit codes.
    """
    art = Artifacts(cfg)
    _RUNNERS[cfg.command](cfg, art)
    return art.write(cfg.out_dir if out_dir is None else out_dir)
