"""Batch driver: ``bell-decoherence --config run.json [--output-dir DIR] [--seed N]``.

A config is one JSON object.  Example (time sweep)::

    {
      "scenario": "time-sweep",
      "spin": {"tau_s": 1.0},
      "angles": {"theta_ab": 1.0471975511965976, "theta_bc": 1.0471975511965976},
      "grid": {"t_min": 0.0, "t_max": 3.0, "n": 301}
    }

Sections per scenario:

* ``time-sweep``      spin, angles, grid {t_min, t_max, n}
* ``angle-sweep``     spin, grid {theta_min, theta_max, n, t}; theta_ab = theta_bc = theta
* ``mc-validate``     noise, mc {dt, n_steps, n_traj, record_every, p0, n_jobs}
* ``spatial-profile`` space, grid {t_min, t_max, n}, optional spatial {r}
* ``crossover``       spin, space, angles

``spin`` is either ``{"tau_s": T}`` or ``{"particle1": {"tau0", "tau1"},
"particle2": {...}}``.  ``angles`` is either coplanar ``{"theta_ab",
"theta_bc"}`` or explicit vectors ``{"a", "b", "c"}``; non-unit vectors are
normalised with a warning.  Times carry no units: they are in whatever base
unit the correlation times are given in (e.g. units of tau_s).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .analytic_dynamics import RelaxationTimes, SpinDecayParams
from .bell_analysis import BellAngles, crossover_separation, evaluate_bell, plane_direction, sweep
from .spatial_decoherence import SpatialParams, big_m, coherence_factor, separation, wavepacket_center
from .stochastic_engine import EnsembleConfig, NoiseParams, TrajectoryConfig, ensemble_average

log = logging.getLogger("bell_decoherence")

SCENARIOS = ("time-sweep", "angle-sweep", "mc-validate", "spatial-profile", "crossover")
REQUIRED = {
    "time-sweep": ("spin", "angles", "grid"),
    "angle-sweep": ("spin", "grid"),
    "mc-validate": ("noise", "mc"),
    "spatial-profile": ("space", "grid"),
    "crossover": ("spin", "space", "angles"),
}
EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    output: str | None = None
    spin: SpinDecayParams | None = None
    space: SpatialParams | None = None
    noise: NoiseParams | None = None
    angles: BellAngles | None = None
    grid: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    spatial: dict = field(default_factory=dict)
    echo: dict = field(default_factory=dict)


@dataclass
class RunSummary:
    scenario: str
    parameters: dict
    headline: dict
    seed: int
    wall_clock: float
    outputs: list[str]

    def to_json(self) -> str:
        # Wall-clock time is logged, not written: the file must be reproducible byte for byte.
        body = {
            "scenario": self.scenario,
            "seed": self.seed,
            "parameters": self.parameters,
            "headline": self.headline,
            "outputs": self.outputs,
        }
        return json.dumps(body, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def number(self, section: dict, key: str, where: str, *, positive=False, nonneg=False, default=None, allow_inf=False):
        if key not in section:
            if default is None:
                self.errors.append(f"{where}.{key}: missing")
                return None
            return default
        val = section[key]
        if isinstance(val, str) and allow_inf and val.lower() in ("inf", "infinity"):
            val = math.inf
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.errors.append(f"{where}.{key}: expected a number, got {val!r}")
            return None
        val = float(val)
        if math.isnan(val) or (math.isinf(val) and not allow_inf):
            self.errors.append(f"{where}.{key}: must be finite, got {val!r}")
            return None
        if positive and not val > 0:
            self.errors.append(f"{where}.{key}: must be > 0, got {val!r}")
            return None
        if nonneg and not val >= 0:
            self.errors.append(f"{where}.{key}: must be >= 0, got {val!r}")
            return None
        return val

    def integer(self, section: dict, key: str, where: str, *, minimum: int, default=None):
        if key not in section:
            if default is None:
                self.errors.append(f"{where}.{key}: missing")
                return None
            return default
        val = section[key]
        if isinstance(val, bool) or not isinstance(val, int):
            self.errors.append(f"{where}.{key}: expected an integer, got {val!r}")
            return None
        if val < minimum:
            self.errors.append(f"{where}.{key}: must be >= {minimum}, got {val!r}")
            return None
        return val

    def section(self, raw: dict, key: str) -> dict | None:
        val = raw.get(key)
        if val is None:
            return None
        if not isinstance(val, dict):
            self.errors.append(f"{key}: expected an object")
            return None
        return val

    def vector(self, section: dict, key: str, where: str):
        val = section.get(key)
        if not (isinstance(val, list) and len(val) == 3 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
            self.errors.append(f"{where}.{key}: expected a list of 3 numbers, got {val!r}")
            return None
        v = np.array(val, dtype=float)
        if not np.all(np.isfinite(v)):
            self.errors.append(f"{where}.{key}: non-finite component")
            return None
        return v


def _normalize(vec: np.ndarray, where: str, c: _Collector):
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        c.errors.append(f"{where}: zero vector has no direction")
        return None
    if abs(norm - 1.0) > 1e-12:
        log.warning("%s = %s is not unit length (|v| = %r); normalising", where, vec.tolist(), norm)
        return vec / norm
    return vec


def _parse_spin(sec: dict, c: _Collector):
    if "tau_s" in sec:
        tau = c.number(sec, "tau_s", "spin", positive=True, allow_inf=True)
        if tau is None:
            return None, None
        return SpinDecayParams.equal(tau), {"tau_s": tau}
    out, echo = {}, {}
    for part in ("particle1", "particle2"):
        psec = sec.get(part)
        if not isinstance(psec, dict):
            c.errors.append(f"spin.{part}: missing (or give spin.tau_s)")
            continue
        t0 = c.number(psec, "tau0", f"spin.{part}", positive=True, allow_inf=True)
        t1 = c.number(psec, "tau1", f"spin.{part}", positive=True, allow_inf=True)
        if t0 is not None and t1 is not None:
            out[part] = RelaxationTimes(t0, t1)
            echo[part] = {"tau0": t0, "tau1": t1}
    if len(out) != 2:
        return None, None
    return SpinDecayParams(out["particle1"], out["particle2"]), echo


def _parse_angles(sec: dict, c: _Collector):
    if "theta_ab" in sec or "theta_bc" in sec:
        ab = c.number(sec, "theta_ab", "angles")
        bc = c.number(sec, "theta_bc", "angles")
        if ab is None or bc is None:
            return None, None
        angles = BellAngles.coplanar(ab, bc)
        return angles, {"theta_ab": ab, "theta_bc": bc, **_vectors_echo(angles)}
    vecs = {}
    for key in ("a", "b", "c"):
        v = c.vector(sec, key, "angles")
        if v is not None:
            v = _normalize(v, f"angles.{key}", c)
        if v is not None:
            vecs[key] = v
    if len(vecs) != 3:
        return None, None
    angles = BellAngles(**vecs)
    return angles, _vectors_echo(angles)


def _vectors_echo(angles: BellAngles) -> dict:
    return {k: getattr(angles, k).tolist() for k in ("a", "b", "c")}


def _parse_space(sec: dict, c: _Collector):
    vals = {
        "m": c.number(sec, "m", "space", positive=True),
        "gamma": c.number(sec, "gamma", "space", positive=True),
        "D": c.number(sec, "D", "space", positive=True),
        "epsilon": c.number(sec, "epsilon", "space", nonneg=True),
        "d": c.number(sec, "d", "space", positive=True),
        "hbar": c.number(sec, "hbar", "space", positive=True, default=1.0),
    }
    if any(v is None for v in vals.values()):
        return None, None
    return SpatialParams(**vals), vals


def _parse_noise(sec: dict, c: _Collector):
    vals = {k: c.number(sec, k, "noise", positive=True, allow_inf=True) for k in ("tau_xx", "tau_yy", "tau_zz")}
    vals["g"] = c.number(sec, "g", "noise", positive=True, default=1.0)
    if any(v is None for v in vals.values()):
        return None, None
    return NoiseParams(**vals), vals


def _parse_time_grid(sec: dict, c: _Collector):
    t_min = c.number(sec, "t_min", "grid", nonneg=True, default=0.0)
    t_max = c.number(sec, "t_max", "grid", positive=True)
    n = c.integer(sec, "n", "grid", minimum=1, default=101)
    if t_min is not None and t_max is not None and t_max < t_min:
        c.errors.append(f"grid.t_max: must be >= grid.t_min, got {t_max!r} < {t_min!r}")
        return None
    if None in (t_min, t_max, n):
        return None
    return {"t_min": t_min, "t_max": t_max, "n": n}


def _parse_angle_grid(sec: dict, c: _Collector):
    lo = c.number(sec, "theta_min", "grid", default=0.0)
    hi = c.number(sec, "theta_max", "grid", default=math.pi)
    n = c.integer(sec, "n", "grid", minimum=1, default=181)
    t = c.number(sec, "t", "grid", nonneg=True, default=0.0)
    if None in (lo, hi, n, t):
        return None
    return {"theta_min": lo, "theta_max": hi, "n": n, "t": t}


def _parse_mc(sec: dict, noise: NoiseParams | None, c: _Collector):
    dt = c.number(sec, "dt", "mc", positive=True)
    n_steps = c.integer(sec, "n_steps", "mc", minimum=1)
    n_traj = c.integer(sec, "n_traj", "mc", minimum=1)
    record_every = c.integer(sec, "record_every", "mc", minimum=1, default=1)
    n_jobs = c.integer(sec, "n_jobs", "mc", minimum=1, default=1)
    p0 = c.vector(sec, "p0", "mc") if "p0" in sec else np.array([0.0, 0.0, 1.0])
    if p0 is not None and np.linalg.norm(p0) > 1 + 1e-10:
        c.errors.append(f"mc.p0: polarization norm {float(np.linalg.norm(p0))!r} exceeds 1")
        p0 = None
    if dt is not None and noise is not None:
        bound = float(np.min(noise.taus)) / 100
        if dt > bound:
            c.errors.append(f"mc.dt: {dt!r} exceeds min(tau_xx, tau_yy, tau_zz)/100 = {bound!r}")
    if None in (dt, n_steps, n_traj, record_every, n_jobs) or p0 is None:
        return None
    return {"dt": dt, "n_steps": n_steps, "n_traj": n_traj, "record_every": record_every, "n_jobs": n_jobs, "p0": p0.tolist()}


def parse_config(text: str, seed_override: int | None = None) -> ExperimentConfig:
    """Validate a JSON config; raises :class:`ConfigError` listing every problem found."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a JSON object"])
    c = _Collector()
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError([f"scenario: expected one of {', '.join(SCENARIOS)}, got {scenario!r}"])
    for key in REQUIRED[scenario]:
        if key not in raw:
            c.errors.append(f"{key}: section required for scenario {scenario!r}")

    seed = raw.get("seed", 0)
    if seed_override is not None:
        seed = seed_override
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        c.errors.append(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
        seed = 0
    cfg = ExperimentConfig(scenario=scenario, seed=seed, output=raw.get("output"))
    echo: dict[str, Any] = {}

    needs = REQUIRED[scenario]
    if "spin" in needs and (sec := c.section(raw, "spin")) is not None:
        cfg.spin, echo["spin"] = _parse_spin(sec, c)
    if "space" in needs and (sec := c.section(raw, "space")) is not None:
        cfg.space, echo["space"] = _parse_space(sec, c)
    if "noise" in needs and (sec := c.section(raw, "noise")) is not None:
        cfg.noise, echo["noise"] = _parse_noise(sec, c)
    if "angles" in needs and (sec := c.section(raw, "angles")) is not None:
        cfg.angles, echo["angles"] = _parse_angles(sec, c)
    if "grid" in needs and (sec := c.section(raw, "grid")) is not None:
        parse = _parse_angle_grid if scenario == "angle-sweep" else _parse_time_grid
        cfg.grid = parse(sec, c) or {}
        echo["grid"] = cfg.grid
    if "mc" in needs and (sec := c.section(raw, "mc")) is not None:
        cfg.mc = _parse_mc(sec, cfg.noise, c) or {}
        echo["mc"] = cfg.mc
    if scenario == "spatial-profile":
        sec = c.section(raw, "spatial") or {}
        r = c.number(sec, "r", "spatial", nonneg=True, default=1.0)
        cfg.spatial = {"r": r}
        echo["spatial"] = cfg.spatial

    if c.errors:
        raise ConfigError(c.errors)
    cfg.echo = echo
    return cfg


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits, '.' decimal separator."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _time_grid(grid: dict) -> np.ndarray:
    if grid["n"] == 1:
        return np.array([grid["t_min"]])
    return np.linspace(grid["t_min"], grid["t_max"], grid["n"])


def _time_sweep(cfg: ExperimentConfig):
    evals = sweep(cfg.spin, cfg.angles, _time_grid(cfg.grid))
    rows = [[e.t, e.e_ab, e.e_ac, e.e_bc, e.lhs, e.rhs, e.violated] for e in evals]
    first = next((e for e in evals if not e.violated), None)
    headline = {
        "lhs_at_start": evals[0].lhs,
        "rhs_at_start": evals[0].rhs,
        "first_nonviolated_t": None if first is None else first.t,
    }
    return ["t", "E_ab", "E_ac", "E_bc", "lhs", "rhs", "violated"], rows, headline


def _angle_sweep(cfg: ExperimentConfig):
    g = cfg.grid
    thetas = np.array([g["theta_min"]]) if g["n"] == 1 else np.linspace(g["theta_min"], g["theta_max"], g["n"])
    rows = []
    for theta in thetas:
        angles = BellAngles(plane_direction(0.0), plane_direction(theta), plane_direction(2 * theta))
        e = evaluate_bell(cfg.spin, angles, g["t"])
        rows.append([theta, e.e_ab, e.lhs, e.rhs, e.violated])
    best = max(rows, key=lambda r: r[2] - r[3])
    headline = {"max_violation_theta": best[0], "max_violation_lhs": best[2], "max_violation_rhs": best[3]}
    return ["theta", "E", "lhs", "rhs", "violated"], rows, headline


def _mc_validate(cfg: ExperimentConfig):
    mc = cfg.mc
    traj = TrajectoryConfig(dt=mc["dt"], n_steps=mc["n_steps"], seed=cfg.seed)
    ens = EnsembleConfig(n_traj=mc["n_traj"], master_seed=cfg.seed, record_every=mc["record_every"], n_jobs=mc["n_jobs"])
    series = ensemble_average(np.array(mc["p0"]), cfg.noise, traj, ens)
    rates = cfg.noise.decay_rates()
    p0 = np.array(mc["p0"])
    rows = []
    for t, mean, err in zip(series.times, series.mean, series.std_err):
        analytic = p0 * np.exp(-rates * t)
        rows.append([t, *mean, *err, *analytic])
    last = rows[-1]
    headline = {
        "final_t": last[0],
        "final_mean": last[1:4],
        "final_stderr": last[4:7],
        "final_analytic": last[7:10],
    }
    header = ["t", "mean_x", "mean_y", "mean_z", "stderr_x", "stderr_y", "stderr_z", "analytic_x", "analytic_y", "analytic_z"]
    return header, rows, headline


def _spatial_profile(cfg: ExperimentConfig):
    p, r = cfg.space, cfg.spatial["r"]
    rows = []
    for t in _time_grid(cfg.grid):
        rows.append(
            [t, wavepacket_center(p, 1, t), wavepacket_center(p, 2, t), separation(p, t), big_m(p, t), coherence_factor(p, r, t)]
        )
    last = rows[-1]
    headline = {"final_t": last[0], "final_separation": last[3], "final_M": last[4], "final_coherence_at_r": last[5]}
    return ["t", "center_1", "center_2", "separation", "M", "coherence_at_r"], rows, headline


def _crossover(cfg: ExperimentConfig) -> dict:
    res = crossover_separation(cfg.spin, cfg.space, cfg.angles)
    if res is None:
        return {"t_star": None, "separation_exact": None, "separation_asymptotic": None}
    return {"t_star": res.t_star, "separation_exact": res.exact, "separation_asymptotic": res.asymptotic}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(cfg: ExperimentConfig, output_dir: str | Path | None = None) -> RunSummary:
    """Execute one scenario and write ``<scenario>.csv`` (or ``.json``) plus ``summary.json``."""
    out = Path(output_dir if output_dir is not None else cfg.output or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot create output directory {out}: {exc}") from exc
    start = time.perf_counter()
    outputs = []
    if cfg.scenario == "crossover":
        headline = _crossover(cfg)
        name = "crossover.json"
        _write(out / name, json.dumps(_jsonable(headline), indent=2, sort_keys=True) + "\n")
    else:
        handler = {
            "time-sweep": _time_sweep,
            "angle-sweep": _angle_sweep,
            "mc-validate": _mc_validate,
            "spatial-profile": _spatial_profile,
        }[cfg.scenario]
        header, rows, headline = handler(cfg)
        name = f"{cfg.scenario}.csv"
        _write(out / name, _csv_text(header, rows))
    outputs.append(name)
    summary = RunSummary(
        scenario=cfg.scenario,
        parameters=_jsonable(cfg.echo),
        headline=_jsonable(headline),
        seed=cfg.seed,
        wall_clock=time.perf_counter() - start,
        outputs=outputs,
    )
    _write(out / "summary.json", summary.to_json())
    log.info("%s finished in %.3f s", cfg.scenario, summary.wall_clock)
    return summary


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="bell-decoherence", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--output-dir", default=None, help="directory for outputs (default: config 'output' or cwd)")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text, seed_override=args.seed)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        summary = run(cfg, args.output_dir)
    except Exception as exc:  # noqa: BLE001 - any failure after validation is a runtime error
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(summary.headline, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
