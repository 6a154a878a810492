"""Experiment orchestration: one ``run_*`` function per CLI command.

Every run writes its CSV outputs and a ``manifest.json`` into the output
directory.  CSVs depend only on the resolved configuration, so identical
configurations give byte-identical CSVs.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .approx import (
    ApproxSolutionParams, build, fit_loglog, pair_cancellation, residual_norm_scan,
)
from .config import ExperimentConfig
from .resonance import brute_force_resonances, enumerate_resonances, write_quadruples_csv
from .solver import SolverConfig, gT_diagnostic, hs_growth_check, solve
from .spectral import Grid, random_field, sobolev_norm, sup_norm, synthesize
from .strichartz import (
    EnsembleSpec, KernelProbe, airy_far_field, airy_profile_decay_scan,
    commutator_test, global_strichartz, kernel_decay_scan, kernel_direct,
    kernel_poisson, short_time_strichartz, write_scan_csv, write_summary_json,
)

__all__ = [
    "RunManifest", "Criterion", "IllposedRecord", "illposedness_experiment",
    "illposedness_criteria", "run_solve", "run_illposedness", "run_residual_scan",
    "run_strichartz", "run_kernel", "run_resonance", "RUNNERS", "write_rows",
]

log = logging.getLogger(__name__)


# -- manifest -----------------------------------------------------------------

@dataclass
class Criterion:
    passed: bool
    value: Any
    threshold: Any
    note: str = ""

    def as_dict(self) -> dict:
        return {"passed": bool(self.passed), "value": _jsonable(self.value),
                "threshold": _jsonable(self.threshold), "note": self.note}


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    config: ExperimentConfig
    outputs: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    criteria: dict[str, Criterion] = field(default_factory=dict)

    @property
    def out(self) -> Path:
        return self.config.out

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        if name not in self.outputs:
            self.outputs.append(name)
        return self.out / name

    @contextmanager
    def timed(self, label: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[label] = self.timings.get(label, 0.0) + time.perf_counter() - start

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria.values())

    def as_dict(self) -> dict:
        hashes = {"params": self.config.params_sha256()}
        if self.config.source_sha256:
            hashes["config_file"] = self.config.source_sha256
        return {
            "command": self.config.command,
            "code_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "config": self.config.resolved(),
            "config_file": self.config.source,
            "cli_overrides": _jsonable(self.config.overrides),
            "input_hashes": hashes,
            "outputs": [{"file": n, "sha256": _sha256(self.out / n)} for n in self.outputs],
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
            "criteria": {k: c.as_dict() for k, c in self.criteria.items()},
            "all_passed": self.passed,
        }

    def write(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / "manifest.json"
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """RFC-4180 CSV with a header row and 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _grid(shape: tuple[int, int]) -> Grid:
    return Grid(int(shape[0]), int(shape[1]))


# -- solve --------------------------------------------------------------------

def run_solve(cfg: ExperimentConfig) -> RunManifest:
    """Integrate ZK from ``u_{theta,m}(0)`` (one run per ``m``) or from a
    seeded random field, and check invariant drift."""
    p = cfg.params
    man = RunManifest(cfg)
    grid = _grid(p["grid"])
    scfg = SolverConfig(dt=p["dt"], T=p["T"], observer_stride=p["observer_stride"],
                        hs_orders=(p["s"],), keep_states=False)
    if p["init"] == "approx":
        cases = [(f"m{m}", build(ApproxSolutionParams(p["theta"], m, p["s"]), 0.0, grid))
                 for m in p["m"]]
    elif p["init"] == "random":
        F = random_field(grid, np.random.default_rng(cfg.seed), band=p["band"])
        F = F * (p["amplitude"] / sup_norm(synthesize(F)))
        cases = [("random", F)]
    else:
        raise ValueError(f"init must be 'approx' or 'random', got {p['init']!r}")
    for label, w0 in cases:
        with man.timed(f"solve_{label}"):
            traj = solve(w0, scfg)
        traj.write_csv(man.path(f"trajectory_{label}.csv"))
        drift = traj.max_drift()
        man.criteria[f"{label}_completed"] = Criterion(traj.aborted is None, traj.aborted, None)
        man.criteria[f"{label}_drift"] = Criterion(max(drift.values()) <= 1e-8, drift, 1e-8)
        growth = hs_growth_check(traj, max(p["s"], 1.0))
        man.criteria[f"{label}_hs_growth"] = Criterion(
            growth.passed, {"ratio": growth.ratio, "g": gT_diagnostic(traj)}, growth.ceiling,
            "diagnostic ceiling exp(10 g(T))")
    return man


# -- ill-posedness --------------------------------------------------------------

@dataclass
class IllposedRecord:
    """Two nonlinear runs from ``u_{+1,m}(0)`` and ``u_{-1,m}(0)``."""

    m: int
    s: float
    t: np.ndarray
    hs_u: np.ndarray
    hs_v: np.ndarray
    distance: np.ndarray
    predicted: np.ndarray
    gap: np.ndarray          # ||u_m(t) - u_{1,m}(t)||_{H^s}
    aborted: str | None

    @property
    def initial_distance(self) -> float:
        return float(self.distance[0])

    @property
    def predicted_initial(self) -> float:
        """H^s size of ``(2/m) cos(2y)``, the leading initial difference."""
        return 2.0 * math.pi * math.sqrt(2.0) * 5.0 ** (self.s / 2.0) / self.m

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.hs_u + self.hs_v))

    def c_fit(self, t_min: float) -> float:
        sel = self.t >= t_min - 1e-12
        return float(np.min(self.distance[sel] / self.t[sel])) if np.any(sel) else math.nan

    def rows(self):
        return zip(self.t, self.hs_u, self.hs_v, self.distance, self.predicted, self.gap)


def illposedness_experiment(ms: Sequence[int], s: float, grid: Grid, dt: float, T: float,
                            observer_stride: int = 20,
                            thetas: tuple[float, float] = (1.0, -1.0)) -> list[IllposedRecord]:
    """Solve ZK from ``u_{theta,m}(0)`` for both ``theta`` and every ``m``.

    A blow-up is recorded on the record and the loop continues with the next
    ``m``.
    """
    cfg = SolverConfig(dt=dt, T=T, observer_stride=observer_stride, hs_orders=(s,))
    th_u, th_v = thetas
    out = []
    for m in ms:
        tu = solve(build(ApproxSolutionParams(th_u, m, s), 0.0, grid), cfg)
        tv = solve(build(ApproxSolutionParams(th_v, m, s), 0.0, grid), cfg)
        n = min(len(tu.times), len(tv.times))
        t = np.asarray(tu.times[:n])
        dist = np.array([sobolev_norm(a - b, s) for a, b in zip(tu.states[:n], tv.states[:n])])
        gap = np.array([sobolev_norm(F - build(ApproxSolutionParams(th_u, m, s), ti, grid), s)
                        for ti, F in zip(t, tu.states[:n])])
        pred = 2.0 * np.abs(np.sin(t / 2.0)) * math.pi * math.sqrt(2.0)
        aborted = tu.aborted or tv.aborted
        if aborted:
            log.warning("m=%d: %s", m, aborted)
        key = f"hs_{s:g}"
        out.append(IllposedRecord(int(m), s, t, tu.column(key)[:n], tv.column(key)[:n],
                                  dist, pred, gap, aborted))
        del tu, tv
    return out


def illposedness_criteria(records: Sequence[IllposedRecord], t_fit_min: float = 0.1,
                          failure_factor: float = 0.5,
                          bound_slack: float = 1.25) -> dict[str, Criterion]:
    """(a) uniform H^s bound, (b) m^-1 initial distance, (c) distance lower
    bound on ``[t_fit_min, T]``, (d) positive gap exponent."""
    ms = np.array([r.m for r in records], float)
    crit = {}
    complete = all(r.aborted is None for r in records)
    crit["runs_completed"] = Criterion(complete, [r.aborted for r in records], None)

    C = bound_slack * max(r.hs_u[0] + r.hs_v[0] for r in records)
    sups = [r.sup_norm for r in records]
    crit["a_uniform_bound"] = Criterion(max(sups) <= C, sups, C,
                                        f"C = {bound_slack} x max_m initial norm sum")

    d0 = np.array([r.initial_distance for r in records])
    scaled = ms * d0
    spread = float(scaled.max() / scaled.min() - 1.0)
    slope = fit_loglog(ms, d0)[0]
    crit["b_initial_distance"] = Criterion(spread <= 0.10 and abs(slope + 1.0) <= 0.10,
                                           {"m_times_d0_spread": spread, "slope": slope},
                                           {"spread": 0.10, "slope": "-1 +- 0.1"})

    worst = []
    for r in records:
        sel = r.t >= t_fit_min - 1e-12
        worst.append(float(np.min(r.distance[sel] / (failure_factor * r.predicted[sel])))
                     if np.any(sel) else math.nan)
    crit["c_failure_bound"] = Criterion(bool(np.all(np.array(worst) >= 1.0)), worst, 1.0,
                                        "min over t of distance / bound")

    gaps = np.array([float(np.max(r.gap)) for r in records])
    eps = -fit_loglog(ms, gaps)[0]
    crit["d_gap_exponent"] = Criterion(eps > 0.0, eps, 0.0)
    return crit


def run_illposedness(cfg: ExperimentConfig) -> RunManifest:
    p = cfg.params
    if p["s"] <= 5.0 / 3.0:
        raise ValueError("the ill-posedness experiment needs s > 5/3")
    if p["T"] < p["t_fit_min"]:
        raise ValueError(f"T = {p['T']} is shorter than t_fit_min = {p['t_fit_min']}")
    man = RunManifest(cfg)
    grid = _grid(p["grid"])
    if any(grid.Mx // 3 < m or grid.My // 3 < 3 for m in p["m"]):
        raise ValueError(f"grid {grid.shape} does not resolve m = {max(p['m'])}")
    with man.timed("solve"):
        records = illposedness_experiment(p["m"], p["s"], grid, p["dt"], p["T"],
                                          p["observer_stride"], tuple(p["thetas"]))
    header = ["t", "hs_u", "hs_v", "distance", "predicted", "gap"]
    for r in records:
        write_rows(man.path(f"illposed_m{r.m}.csv"), header, r.rows())
    write_rows(man.path("illposed_summary.csv"),
               ["m", "initial_distance", "predicted_initial", "sup_hs", "c_fit",
                "gap_sup", "aborted"],
               [(r.m, r.initial_distance, r.predicted_initial, r.sup_norm,
                 r.c_fit(p["t_fit_min"]), float(np.max(r.gap)), r.aborted is not None)
                for r in records])
    man.criteria.update(illposedness_criteria(records, p["t_fit_min"], p["failure_factor"],
                                              p["bound_slack"]))
    return man


# -- residual scan ------------------------------------------------------------------

def run_residual_scan(cfg: ExperimentConfig) -> RunManifest:
    p = cfg.params
    man = RunManifest(cfg)
    times = np.linspace(0.0, 1.0, p["n_times"])
    for s in p["s"]:
        with man.timed(f"scan_s{s:g}"):
            scan = residual_norm_scan(p["theta"], s, p["m"], times, p["literal"])
        scan.write_csv(man.path(f"residual_s{s:g}.csv"))
        man.criteria[f"l2_slope_s{s:g}"] = Criterion(
            abs(scan.l2_slope - scan.predicted_slope) <= 0.15, scan.l2_slope,
            f"{scan.predicted_slope:g} +- 0.15", f"H^s slope {scan.hs_slope:.4f} (reported only)")
        worst = max(pair_cancellation(ApproxSolutionParams(p["theta"], m, s), t,
                                      literal=p["literal"])[0]
                    for m in p["m"] for t in times[::5])
        man.criteria[f"pair_cancellation_s{s:g}"] = Criterion(worst <= 1e-12, worst, 1e-12)
    return man


# -- strichartz ---------------------------------------------------------------------

def run_strichartz(cfg: ExperimentConfig) -> RunManifest:
    p = cfg.params
    man = RunManifest(cfg)
    summary: dict[str, Any] = {"seed": cfg.seed}

    Ns = list(p["N"])
    maxima = []
    with man.timed("short_time"):
        for N in Ns:
            st = short_time_strichartz(N, EnsembleSpec(p["count"], cfg.seed, N),
                                       p["n_time"], p["oversample"])
            maxima.append(st.max_ratio)
    slope, intercept, rms = fit_loglog(Ns, maxima)
    C = maxima[0] * Ns[0] ** (1.0 / 3.0)
    write_scan_csv(man.path("strichartz_short.csv"),
                   [(N, float(N) ** -2, v, C * N ** (-1.0 / 3.0)) for N, v in zip(Ns, maxima)])
    summary["short_time"] = {"N": Ns, "max_ratio": maxima, "slope": slope, "fit_rms": rms}
    man.criteria["short_time_slope"] = Criterion(slope <= -0.2, slope, -0.2)

    rows, glob = [], {}
    with man.timed("global"):
        for sp in p["s_prime"]:
            vals = [global_strichartz(sp, EnsembleSpec(p["global_count"], cfg.seed, b),
                                      p["global_n_time"], p["oversample"]).max_ratio
                    for b in p["global_bands"]]
            rows += [(b, 1.0, v, vals[0]) for b, v in zip(p["global_bands"], vals)]
            glob[f"{sp:g}"] = vals
    write_scan_csv(man.path("strichartz_global.csv"), rows)
    summary["global"] = glob
    for sp, vals in glob.items():
        if float(sp) > 2.0 / 3.0:
            ok = all(b <= a * 1.1 for a, b in zip(vals, vals[1:]))
            man.criteria[f"global_nonincreasing_s{sp}"] = Criterion(ok, vals, "each <= 1.1 x previous")

    comm = {}
    with man.timed("commutator"):
        for s in p["commutator_s"]:
            comm[f"{s:g}"] = [commutator_test(EnsembleSpec(p["commutator_count"], cfg.seed, b), s)
                              for b in p["commutator_bands"]]
    write_rows(man.path("commutator.csv"), ["band", "s", "max_ratio"],
               [(b, float(s), v) for s, vals in comm.items()
                for b, v in zip(p["commutator_bands"], vals)])
    summary["commutator"] = comm
    for s, vals in comm.items():
        ok = all(b <= 1.1 * a for a, b in zip(vals, vals[1:])) and max(vals) <= 10.0
        man.criteria[f"commutator_s{s}"] = Criterion(ok, vals, "<= 10 and growth <= 10% per doubling")
    write_summary_json(man.path("strichartz_summary.json"), _jsonable(summary))
    return man


# -- kernel and profile ----------------------------------------------------------

FAR_FIELD_CONSTANT = 1.0
FAR_FIELD_X = np.concatenate([-np.geomspace(100.5, 1000.0, 6), np.geomspace(100.5, 1000.0, 6)])


def run_kernel(cfg: ExperimentConfig) -> RunManifest:
    p = cfg.params
    man = RunManifest(cfg)
    summary: dict[str, Any] = {}

    Ns = list(p["N"])
    scans = []
    with man.timed("kernel_decay"):
        for N in Ns:
            scans.append(kernel_decay_scan(N, p["n_t"], p["n_grid"]))
    consts = [float(np.max(sc.sup * sc.t ** (2.0 / 3.0))) for sc in scans]
    C = consts[0]
    write_scan_csv(man.path("kernel_decay.csv"),
                   [(sc.N, t, v, C * t ** (-2.0 / 3.0)) for sc in scans for t, v in zip(sc.t, sc.sup)])
    summary["kernel"] = {"N": Ns, "slopes": [sc.slope for sc in scans], "constants": consts}
    man.criteria["kernel_constant"] = Criterion(
        all(C / 2.0 <= c <= 2.0 * C for c in consts), consts, f"within 2x of {C:.6g}")
    man.criteria["kernel_exponent"] = Criterion(
        all(sc.slope <= -0.55 for sc in scans), [sc.slope for sc in scans], -0.55)

    # direct vs Poisson at the smallest N, t = N^-2
    N0 = Ns[0]
    probe = KernelProbe(N0, float(N0) ** -2, p["truncation"])
    k = p["compare_points"]
    xs = np.linspace(0.0, np.pi, k)
    ys = np.linspace(0.0, np.pi / 2, k)
    with man.timed("kernel_compare"):
        direct = kernel_direct(probe, xs, ys)
        poisson = kernel_poisson(probe, xs, ys)
    scale = abs(kernel_direct(probe, 0.0, 0.0)[0])
    rel = float(np.max(np.abs(direct - poisson)) / scale)
    write_rows(man.path("kernel_compare.csv"),
               ["N", "t", "x", "y", "direct_re", "direct_im", "poisson_re", "poisson_im"],
               [(N0, probe.t, x, y, d.real, d.imag, q.real, q.imag)
                for x, y, d, q in zip(xs, ys, direct, poisson)])
    man.criteria["direct_vs_poisson"] = Criterion(rel <= 1e-4, rel, 1e-4,
                                                  f"truncation {p['truncation']}")

    profile_Ns = list(p["profile_N"])
    prof = []
    with man.timed("profile_decay"):
        for N in profile_Ns:
            prof.append(airy_profile_decay_scan(N, p["profile_n_t"]))
    pconsts = [float(np.max(sc.sup * sc.t ** (1.0 / 3.0))) for sc in prof]
    Cp = pconsts[0]
    write_scan_csv(man.path("profile_decay.csv"),
                   [(sc.N, t, v, Cp * t ** (-1.0 / 3.0)) for sc in prof for t, v in zip(sc.t, sc.sup)])
    man.criteria["profile_constant"] = Criterion(
        all(Cp / 2.0 <= c <= 2.0 * Cp for c in pconsts), pconsts, f"within 2x of {Cp:.6g}")
    man.criteria["profile_exponent"] = Criterion(
        all(sc.slope <= -0.28 for sc in prof), [sc.slope for sc in prof], -0.28)
    far = []
    with man.timed("profile_far_field"):
        for N in profile_Ns:
            for t in (float(N) ** -3, float(N) ** -2):
                far.append((N, t, airy_far_field(N, t, FAR_FIELD_X), FAR_FIELD_CONSTANT))
    write_scan_csv(man.path("profile_far_field.csv"), far)
    man.criteria["profile_far_field"] = Criterion(
        max(r[2] for r in far) <= FAR_FIELD_CONSTANT, [r[2] for r in far], FAR_FIELD_CONSTANT,
        "max |F_N(X)| N^2 |X|^3 over 100 < |X| <= 1000")
    summary["profile"] = {"N": profile_Ns, "slopes": [sc.slope for sc in prof],
                          "constants": pconsts}
    write_summary_json(man.path("kernel_summary.json"), _jsonable(summary))
    return man


# -- resonance ------------------------------------------------------------------

def run_resonance(cfg: ExperimentConfig) -> RunManifest:
    p = cfg.params
    man = RunManifest(cfg)
    B = p["B"]
    with man.timed("enumerate"):
        rows = enumerate_resonances(B)
    write_quadruples_csv(man.path("resonances.csv"), rows)
    found = {tuple(r) for r in rows.tolist()}
    family = [(m, 0, n, 2 * n) for m in range(-B, B + 1) for n in range(-(B // 2), B // 2 + 1)]
    man.criteria["family_present"] = Criterion(all(f in found for f in family), len(family), None)
    if B <= p["brute_force_max"]:
        with man.timed("brute_force"):
            ref = brute_force_resonances(B)
        man.criteria["matches_brute_force"] = Criterion(
            np.array_equal(ref, rows), {"enumerated": len(rows), "brute_force": len(ref)}, None)
    return man


RUNNERS = {
    "solve": run_solve,
    "illposed": run_illposedness,
    "residual-scan": run_residual_scan,
    "strichartz": run_strichartz,
    "kernel": run_kernel,
    "resonance": run_resonance,
}
