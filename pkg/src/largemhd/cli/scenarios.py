"""Named reproduction scenarios.

Each scenario turns a :class:`RunConfig` into a list of :class:`Check`
results plus any trajectories worth writing out.  ``execute`` runs one and
writes report.json, CSV files and plots into the output directory.
"""

from __future__ import annotations

import json
import logging
import math
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..background import (
    BackgroundState,
    background_at,
    decomposition_residual_2d,
    identity_residual_3d,
    interaction_residual,
)
from ..diagnostics.checks import bernstein_check, bootstrap_monitor, energy_balance, lemma33_check
from ..diagnostics.io import read_snapshot, write_csv, write_snapshot
from ..diagnostics.moser import moser_check, moser_ratios, random_band_limited
from ..diagnostics.norms import l2_norm, linf_norm, sobolev_norm, spectral_l1_norm
from ..diagnostics.reference import direct_product
from ..initial_data import DataSpec, beltrami_residual, build_data, largeness_lhs, verify_support
from ..solver import BlowUpError, Trajectory, integrate_background, run
from ..spectral import (
    DomainSpec,
    PhysicalField,
    SpectralField,
    apply_radial_multiplier,
    differentiate,
    forward_transform,
    fractional_power,
    multiply_dealiased,
)
from .config import RunConfig, config_hash, default_tables, validate
from .plots import emit_plots

__all__ = ["Check", "ScenarioResult", "SCENARIOS", "run_scenario", "execute", "bootstrap_threshold"]

log = logging.getLogger(__name__)

IDENTITY_TOL = 1e-10
T_INDEPENDENCE_TOL = 1e-10


@dataclass
class Check:
    """One verdict: ``value`` compared against ``envelope`` (``kind`` is "max" for <=, "min" for >=)."""

    name: str
    value: float
    envelope: float
    passed: bool
    kind: str = "max"

    @classmethod
    def at_most(cls, name: str, value: float, envelope: float) -> "Check":
        return cls(name, float(value), float(envelope), bool(value <= envelope), "max")

    @classmethod
    def at_least(cls, name: str, value: float, envelope: float) -> "Check":
        return cls(name, float(value), float(envelope), bool(value >= envelope), "min")

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        op = "<=" if self.kind == "max" else ">="
        return f"{verdict}  {self.name}: value={self.value:.6g} {op} {self.envelope:.6g}"


@dataclass
class ScenarioResult:
    scenario: str
    checks: list = field(default_factory=list)
    trajectories: dict = field(default_factory=dict)
    eta: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _for_dim(cfg: RunConfig, dim: int) -> RunConfig:
    """``cfg`` if it already has dimension ``dim``, else the defaults for ``dim`` with cfg's solver."""
    if cfg.domain.dim == dim:
        return cfg
    base = validate(default_tables(dim))
    return replace(base, solver=cfg.solver, checks=cfg.checks)


def _background(cfg: RunConfig, mu=None, nu=None):
    u0, b0, U0 = build_data(cfg.data, cfg.domain)
    s = cfg.solver
    bg = BackgroundState(U0, s.mu if mu is None else mu, s.nu if nu is None else nu, s.alpha, s.beta)
    return u0, b0, bg


def bootstrap_threshold(cfg: RunConfig, U0: SpectralField) -> float:
    """Configured eta, or eta_fraction times the background H3 energy ||U0||^2 + ||B0||^2."""
    if cfg.checks.eta is not None:
        return cfg.checks.eta
    return cfg.checks.eta_fraction * 2.0 * sobolev_norm(U0, 3) ** 2


# -- identity-suite -------------------------------------------------------------


def identity_suite(cfg: RunConfig) -> ScenarioResult:
    """Parallel-field cancellation, the 2D and 3D splittings of g, and the Beltrami property.

    Each identity is evaluated at t in {0, 1} for the configured (mu, nu) and
    for nu halved, so both the degenerate and the general path are covered.
    """
    res = ScenarioResult("identity-suite")
    s = cfg.solver
    pairs = [(s.mu, s.nu), (s.mu, 0.5 * s.nu)]
    for dim in (2, 3):
        c = _for_dim(cfg, dim)
        _, _, bg0 = _background(c)
        worst = {"interaction": 0.0, "split": 0.0}
        for mu, nu in pairs:
            bg = BackgroundState(bg0.U0, mu, nu, s.alpha, s.beta)
            for t in (0.0, 1.0):
                worst["interaction"] = max(worst["interaction"], interaction_residual(bg, t)[1])
                split = decomposition_residual_2d if dim == 2 else identity_residual_3d
                worst["split"] = max(worst["split"], split(bg, t)[1])
        res.checks.append(Check.at_most(f"interaction_{dim}d", worst["interaction"], IDENTITY_TOL))
        name = "decomposition_2d" if dim == 2 else "identity_3d"
        res.checks.append(Check.at_most(name, worst["split"], IDENTITY_TOL))
        if dim == 3:
            lam = l2_norm(apply_radial_multiplier(bg0.U0, fractional_power(1.0)))
            res.checks.append(Check.at_most("beltrami_3d", beltrami_residual(bg0.U0) / lam, IDENTITY_TOL))
        res.checks.append(
            Check.at_most(f"annulus_support_{dim}d", len(verify_support(bg0.U0, c.data.epsilon)), 0)
        )
    return res


# -- background-exact -----------------------------------------------------------

CONVERGENCE_DTS = (0.5, 0.25, 0.125, 0.0625)


def background_error(bg: BackgroundState, dt: float, t_end: float = 1.0) -> float:
    """Relative L2 error of the stepped forced linear system against the closed form."""
    s = integrate_background(bg, dt, t_end)
    U, B = background_at(bg, t_end)
    return (l2_norm(s.u - U) + l2_norm(s.b - B)) / (l2_norm(U) + l2_norm(B))


def background_exact(cfg: RunConfig) -> ScenarioResult:
    res = ScenarioResult("background-exact")
    _, _, bg = _background(cfg)
    res.checks.append(Check.at_most("background_error_dt1e-3", background_error(bg, 1e-3), 1e-8))
    errs = [background_error(bg, dt) for dt in CONVERGENCE_DTS]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    res.notes["errors"] = dict(zip(CONVERGENCE_DTS, errs))
    res.checks.append(Check.at_least("background_halving_ratio", min(ratios), 12.0))
    return res


# -- large-data runs --------------------------------------------------------------


def _divergence_ratio(F: SpectralField) -> float:
    n = l2_norm(F)
    return l2_norm(differentiate(F, "divergence")) / n if n else 0.0


def large_data(cfg: RunConfig, name: str, out_dir: Path | None = None) -> ScenarioResult:
    """Integrate the large-data problem and monitor the bootstrap quantity."""
    res = ScenarioResult(name)
    u0, b0, U0 = build_data(cfg.data, cfg.domain)
    eta = bootstrap_threshold(cfg, U0)
    res.eta = eta
    env = cfg.checks.envelope
    res.checks.append(Check.at_least("largeness_linf_U0", linf_norm(U0), 1.0))
    try:
        traj = run(cfg.solver, cfg.data, cfg.domain, eta=eta, dump_dir=out_dir)
    except BlowUpError as err:
        res.checks.append(Check.at_least("no_blowup", err.t / cfg.solver.t_end, 1.0))
        return res
    res.trajectories["trajectory"] = traj
    res.checks.append(Check.at_least("no_blowup", traj.final.t / cfg.solver.t_end, 1.0))
    boot = bootstrap_monitor(traj, eta)
    res.notes["crossing_time"] = boot.crossing_time
    res.checks.append(Check.at_most("bootstrap_sup", boot.sup, eta))
    res.checks.append(Check.at_most("lemma33_ratio_f", max(r.lemma33_ratio_f for r in traj), env))
    res.checks.append(Check.at_most("lemma33_ratio_G", max(r.lemma33_ratio_G for r in traj), env))
    res.checks.append(Check.at_most("bernstein_ratio", max(r.bernstein_ratio_U for r in traj), env))
    u, b = traj.physical_fields()
    res.checks.append(Check.at_most("divergence_final", max(_divergence_ratio(u), _divergence_ratio(b)), 1e-11))
    if cfg.checks.snapshot_every > 0 and out_dir is not None:
        write_snapshot(u, Path(out_dir) / "final_u.mhdf")
        write_snapshot(b, Path(out_dir) / "final_b.mhdf")
    return res


def large_data_2d(cfg: RunConfig, out_dir=None) -> ScenarioResult:
    return large_data(_for_dim(cfg, 2), "large-data-2d", out_dir)


def large_data_3d(cfg: RunConfig, out_dir=None) -> ScenarioResult:
    c = cfg if cfg.domain.dim == 3 else replace(_for_dim(cfg, 3), solver=replace(cfg.solver, t_end=20.0))
    return large_data(c, "large-data-3d", out_dir)


# -- lemma-suite --------------------------------------------------------------------


def _halved(cfg: RunConfig) -> RunConfig:
    """Same problem with eps halved and L doubled; N doubled if the band no longer fits."""
    eps = cfg.data.epsilon / 2
    L = 2 * cfg.domain.scale
    N = cfg.domain.N
    while cfg.domain.dealias_fraction * N / (2 * L) < 2 * (1 + eps):
        N *= 2
    return replace(cfg, domain=replace(cfg.domain, scale=L, points_per_axis=N), data=replace(cfg.data, epsilon=eps))


def lemma_checks(cfg: RunConfig, res: ScenarioResult) -> None:
    env = cfg.checks.envelope
    dim = cfg.domain.dim
    _, _, bg = _background(cfg)
    lem = lemma33_check(bg, (0.0, 1.0, 2.0), cfg.data.epsilon, envelope=env)
    for key in ("ratio_f", "ratio_G"):
        res.checks.append(Check.at_most(f"lemma33_{key}_{dim}d", lem.values["max"][key], env))
    growth = max(lem.values["growth"].values())
    res.checks.append(Check.at_most(f"lemma33_t_growth_{dim}d", growth, T_INDEPENDENCE_TOL))
    b0, b2 = bernstein_check(bg, 0.0, env), bernstein_check(bg, 2.0, env)
    for key in ("U", "B"):
        res.checks.append(Check.at_most(f"bernstein_{key}_{dim}d", max(b0.values[key], b2.values[key]), env))
        drift = abs(b0.values[key] - b2.values[key]) / b0.values[key]
        res.checks.append(Check.at_most(f"bernstein_{key}_t_variation_{dim}d", drift, T_INDEPENDENCE_TOL))


def eps_halving_ratio(cfg: RunConfig) -> float:
    """max(r, 1/r) for r the change of the f ratio when eps is halved."""
    vals = []
    for c in (cfg, _halved(cfg)):
        _, _, bg = _background(c)
        vals.append(lemma33_check(bg, (0.0,), c.data.epsilon).values["max"]["ratio_f"])
    r = vals[1] / vals[0]
    return max(r, 1 / r)


SCALING_EPS = (0.2, 0.1, 0.05)


def scaling_sweep(dim: int = 2, eps_values=SCALING_EPS, C: float = 1.0) -> dict:
    """Norms of U0 normalized by (log log 1/eps)^(1/2) over eps, with L = 2/eps."""
    rows = []
    for eps in eps_values:
        L = 2.0 / eps
        N = 16
        while (2.0 / 3.0) * N / (2 * L) < 2 * (1 + eps):
            N *= 2
        domain = DomainSpec(dim, L, N)
        u0, b0, U0 = build_data(DataSpec(eps), domain)
        ll = math.sqrt(math.log(math.log(1 / eps)))
        v0 = SpectralField.zeros(domain, dim)
        rows.append({
            "epsilon": eps,
            "N": N,
            "l1hat": spectral_l1_norm(U0) / ll,
            "l2": l2_norm(U0) * math.sqrt(eps) / ll,
            "linf": linf_norm(U0) / ll,
            "lhs": largeness_lhs(v0, v0, U0, eps, C),
        })
    return {"rows": rows}


def scaling_checks(res: ScenarioResult, C: float = 1.0) -> None:
    sweep = scaling_sweep(C=C)
    rows = sweep["rows"]
    res.notes["scaling"] = rows
    for key in ("l1hat", "l2", "linf"):
        vals = [r[key] for r in rows]
        res.checks.append(Check.at_most(f"scaling_band_{key}", max(vals) / min(vals), 4.0))
    lhs = [r["lhs"] for r in rows]
    # largest step-to-step ratio; < 1 means strictly decreasing as eps shrinks
    worst = max(b / a for a, b in zip(lhs, lhs[1:]))
    res.checks.append(Check.at_most("smallness_lhs_step_ratio", worst, 1.0))


def moser_checks(cfg: RunConfig, res: ScenarioResult) -> None:
    domain = DomainSpec(2, 1.0, 64)
    rep = moser_check(cfg.checks.moser_trials, cfg.data.seed, domain)
    res.notes["moser_constants"] = rep.constants
    res.checks.append(Check.at_most("moser_resolution_spread", max(rep.spread.values()), 2.0))
    finite = all(math.isfinite(v) for c in rep.constants.values() for v in c.values())
    res.checks.append(Check.at_least("moser_finite", float(finite), 1.0))
    rng = np.random.default_rng(cfg.data.seed)
    f = random_band_limited(domain, rng)
    const = forward_transform(PhysicalField(domain, np.full((1,) + domain.physical_shape, 2.5)))
    comm = moser_ratios(f, const)["lhs"]["commutator_a"]
    res.checks.append(Check.at_most("moser_constant_commutator", comm, 0.0))


def lemma_suite(cfg: RunConfig) -> ScenarioResult:
    res = ScenarioResult("lemma-suite")
    for dim in (2, 3):
        lemma_checks(_for_dim(cfg, dim), res)
    res.checks.append(Check.at_most("lemma33_eps_halving_2d", eps_halving_ratio(_for_dim(cfg, 2)), 1.5))
    scaling_checks(res, cfg.checks.largeness_C)
    moser_checks(cfg, res)
    return res


# -- convergence ------------------------------------------------------------------------

RICHARDSON_DTS = (0.05, 0.025, 0.0125)


def _terminal(cfg: RunConfig, data: DataSpec, **solver) -> Trajectory:
    scfg = replace(cfg.solver, **solver)
    return run(scfg, data, cfg.domain)


def formulation_gap(cfg: RunConfig, data: DataSpec, dt: float = 0.02, t_end: float = 1.0) -> float:
    out = []
    for form in ("full", "perturbation"):
        tr = _terminal(cfg, data, formulation=form, dt=dt, t_end=t_end, record_every=t_end)
        out.append(tr.physical_fields())
    (u1, b1), (u2, b2) = out
    return (l2_norm(u1 - u2) + l2_norm(b1 - b2)) / (l2_norm(u1) + l2_norm(b1))


def richardson_ratio(cfg: RunConfig, data: DataSpec, dts=RICHARDSON_DTS, t_end: float = 1.0) -> float:
    fields = []
    for dt in dts:
        tr = _terminal(cfg, data, formulation="full", dt=dt, t_end=t_end, record_every=t_end)
        fields.append(tr.physical_fields())
    diffs = [l2_norm(a[0] - b[0]) + l2_norm(a[1] - b[1]) for a, b in zip(fields, fields[1:])]
    return min(x / y for x, y in zip(diffs, diffs[1:]))


def decay_energy_balance(cfg: RunConfig, dt: float = 0.02, t_end: float = 1.0) -> tuple[float, Trajectory]:
    """Unforced full-system run recorded every step; worst per-step balance error."""
    tr = _terminal(cfg, cfg.data, formulation="full", dt=dt, t_end=t_end, record_every=dt)
    return energy_balance(tr).max_relative_error, tr


def csv_rerun_identical(cfg: RunConfig, t_end: float = 0.2) -> bool:
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            tr = _terminal(cfg, cfg.data, t_end=t_end, record_every=t_end / 4)
            path = Path(tmp) / f"run{i}.csv"
            write_csv(tr, path)
            blobs.append(path.read_bytes())
    return blobs[0] == blobs[1]


def dealias_error(seed: int = 0) -> float:
    """Worst relative gap between dealiased and directly convolved products at N = 16."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for dim in (2, 3):
        d = DomainSpec(dim, 1.0, 16)
        F, G = (forward_transform(PhysicalField(d, rng.standard_normal((dim,) + d.physical_shape))) for _ in range(2))
        kinds = ["pointwise", "dot", "advection"] + (["cross"] if dim == 3 else [])
        for kind in kinds:
            ref = direct_product(F, G, kind).coeffs
            gap = np.max(np.abs(multiply_dealiased(F, G, kind).coeffs - ref)) / np.max(np.abs(ref))
            worst = max(worst, float(gap))
    return worst


def snapshot_roundtrip_exact(seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    d = DomainSpec(3, 1.3, 16)
    F = forward_transform(PhysicalField(d, rng.standard_normal((3,) + d.physical_shape)))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "f.mhdf"
        write_snapshot(F, path)
        G = read_snapshot(path)
    return G.domain == F.domain and G.coeffs.tobytes() == F.coeffs.tobytes()


def convergence(cfg: RunConfig) -> ScenarioResult:
    """Formulation equivalence, self-convergence, energy balance and I/O determinism.

    When the configured data has no perturbation, small random (v0, c0) of
    L2 size 0.05 are added so the nonlinear coupling is exercised.
    """
    res = ScenarioResult("convergence")
    data = cfg.data
    if data.v0_amplitude == 0 and data.c0_amplitude == 0:
        data = replace(data, v0_amplitude=0.05, c0_amplitude=0.05)
    res.checks.append(Check.at_most("formulation_gap", formulation_gap(cfg, data), 1e-6))
    res.checks.append(Check.at_least("richardson_halving_ratio", richardson_ratio(cfg, data), 12.0))
    err, tr = decay_energy_balance(cfg)
    res.trajectories["decay"] = tr
    res.checks.append(Check.at_most("energy_balance_decay", err, 1e-3))
    res.checks.append(Check.at_most("dealias_vs_convolution", dealias_error(cfg.data.seed), 1e-12))
    res.checks.append(Check.at_least("snapshot_roundtrip_exact", float(snapshot_roundtrip_exact(cfg.data.seed)), 1.0))
    res.checks.append(Check.at_least("csv_rerun_identical", float(csv_rerun_identical(cfg)), 1.0))
    return res


SCENARIOS = {
    "identity-suite": identity_suite,
    "background-exact": background_exact,
    "large-data-2d": large_data_2d,
    "large-data-3d": large_data_3d,
    "lemma-suite": lemma_suite,
    "convergence": convergence,
}


def run_scenario(name: str, cfg: RunConfig, out_dir=None) -> ScenarioResult:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    fn = SCENARIOS[name]
    if name.startswith("large-data"):
        return fn(cfg, out_dir)
    return fn(cfg)


def report_dict(result: ScenarioResult, cfg: RunConfig, wall_time: float) -> dict:
    return {
        "scenario": result.scenario,
        "config-hash": config_hash(cfg),
        "checks": [
            {"name": c.name, "value": c.value, "envelope": c.envelope, "pass": c.passed} for c in result.checks
        ],
        "wall_time": wall_time,
    }


def execute(name: str, cfg: RunConfig, out_dir=None, plots: bool = True) -> tuple[ScenarioResult, dict]:
    """Run a scenario and write report.json, one CSV per trajectory and plots."""
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = run_scenario(name, cfg, out)
    wall = time.perf_counter() - start
    for key, traj in result.trajectories.items():
        write_csv(traj, out / f"{key}.csv")
        if plots and len(traj):
            emit_plots(traj, out / f"plots_{key}" if len(result.trajectories) > 1 else out, eta=result.eta)
    report = report_dict(result, cfg, wall)
    (out / "report.json").write_text(json.dumps(report, indent=2, allow_nan=True) + "\n", encoding="utf-8")
    return result, report
