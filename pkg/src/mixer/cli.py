"""Batch experiment runner behind the ``mixer`` command.

A run is described by an ``ExperimentConfig`` (a JSON object, see
``FIELDS``), and writes into ``out``:

* ``manifest.json``: resolved config, thresholds, version, backend, timing,
  summary and assertion results;
* ``replicas.csv``: one ``ReplicaResult`` per replica, headed by a
  ``# schema=...`` line;
* ``trajectories/replica_NNNNN.csv`` for the trajectory kinds.

Replica k draws from ``seed_stream(master_seed, k)``, so output is identical
for any thread count and a manifest reproduces its run.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .cm_dynamics import (RECORD_COLUMNS, CmTrajectory, calibrate_good_set_K,
                          classify_rc_phase, default_max_steps,
                          exit_window, good_set_check, init_product, run_dynamics)
from .errors import ConfigError, IoError, MixerError
from .exact_oracle import cm_exact_kernel_check, glauber_balance_check
from .parallel import run_replicas, thread_count
from .phase_diagram import (ModelParams, beta_critical, beta_thresholds,
                            giant_fraction_derivative, potts_thresholds,
                            rc_thresholds, surrogate_params, surrogate_variance_sequence,
                            xi_weight)
from .potts_glauber import init_hat_nu, run_glauber, run_until_phase, saddle_window
from .seeding import draw_key, seed_stream
from .surrogate import (CrnDraws, estimate_A_q, find_c_star_potts, potts_sde, rc_c_star,
                        simulate_zbar)

__all__ = ["ExperimentConfig", "ReplicaResult", "run_experiment", "main", "seed_stream"]

SCHEMA_VERSION = 1
KINDS = ("thresholds", "cm-exit", "cm-mix", "potts-exit", "potts-mix", "surrogate-cstar",
         "verify-exact", "sw-mix")
STOCHASTIC = frozenset(KINDS) - {"thresholds", "verify-exact"}
TRAJECTORY_KINDS = frozenset({"cm-mix", "sw-mix", "potts-mix"})
AUTO = "auto-cstar"
AUX_STREAM = (1 << 64) - 1

# name: (type, default)
FIELDS = {
    "kind": (str, None),
    "q": (float, None),
    "beta": (float, None),
    "n": (int, None),
    "lambda0": ("init", None),
    "m0": ("init", None),
    "gamma": (float, None),
    "replicas": (int, 100),
    "max_steps": (int, None),
    "master_seed": (int, None),
    "out": (str, "mixer-out"),
    "stride": (int, None),
    "dynamics": (str, "cm"),
    "threads": (int, None),
    "target": (float, None),
    "model": (str, "rc"),
    "surrogate_replicas": (int, 20000),
    "good_set_K": (float, None),
    "pilot_replicas": (int, 100),
    "good_set_T": (int, 5),
    "tol": (float, 0.1),
    "dt": (float, 1e-3),
    "A": (float, None),
    "assert_tol": (float, None),
    "expect_phase": (str, None),
    "min_fraction": (float, 0.95),
}

REQUIRED = {
    "thresholds": ("q",),
    "verify-exact": ("n", "q"),
    "surrogate-cstar": ("q",),
    "cm-exit": ("n", "q", "lambda0"),
    "cm-mix": ("n", "q", "lambda0"),
    "sw-mix": ("n", "q", "lambda0"),
    "potts-exit": ("n", "q", "m0"),
    "potts-mix": ("n", "q", "m0"),
}

REPLICA_COLUMNS = {
    "cm-exit": ("replica", "outcome", "steps", "L1", "good_set_violation"),
    "cm-mix": ("replica", "outcome", "steps", "L1", "good_set_violation"),
    "sw-mix": ("replica", "outcome", "steps", "L1", "good_set_violation"),
    "potts-exit": ("replica", "outcome", "steps", "dominant", "counts"),
    "potts-mix": ("replica", "outcome", "steps", "dominant", "counts", "max_gap"),
    "surrogate-cstar": ("replica", "outcome", "steps"),
}

OUTCOMES = {
    "cm-exit": ("ExitLeft", "ExitRight", "Timeout"),
    "potts-exit": ("ExitLeft", "ExitRight", "Timeout"),
    "surrogate-cstar": ("ExitLeft", "ExitRight", "Timeout"),
    "cm-mix": ("Ordered", "Disordered"),
    "sw-mix": ("Ordered", "Disordered"),
}
_EXIT_LABEL = {-1: "ExitLeft", 1: "ExitRight", 0: "Timeout"}


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------

def _coerce(name: str, value):
    typ = FIELDS[name][0]
    if value is None:
        return None
    try:
        if typ == "init":
            if value == AUTO:
                return AUTO
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if typ is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if typ is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if not isinstance(value, str):
            raise TypeError
        return value
    except (TypeError, ValueError):
        want = "a number or 'auto-cstar'" if typ == "init" else typ.__name__
        raise ConfigError(f"field '{name}': expected {want}, got {value!r}") from None


@dataclass
class ExperimentConfig:
    kind: str
    q: float | None = None
    beta: float | None = None
    n: int | None = None
    lambda0: float | str | None = None
    m0: float | str | None = None
    gamma: float | None = None
    replicas: int = 100
    max_steps: int | None = None
    master_seed: int | None = None
    out: str = "mixer-out"
    stride: int | None = None
    dynamics: str = "cm"
    threads: int | None = None
    target: float | None = None
    model: str = "rc"
    surrogate_replicas: int = 20000
    good_set_K: float | None = None
    pilot_replicas: int = 100
    good_set_T: int = 5
    tol: float = 0.1
    dt: float = 1e-3
    A: float | None = None
    assert_tol: float | None = None
    expect_phase: str | None = None
    min_fraction: float = 0.95

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(d) - set(FIELDS))
        if unknown:
            raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
        vals = {k: _coerce(k, v) for k, v in d.items()}
        if "kind" not in vals or vals["kind"] is None:
            raise ConfigError("field 'kind': missing")
        cfg = cls(**{k: (v if v is not None or FIELDS[k][1] is None else FIELDS[k][1])
                     for k, v in vals.items()})
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str, source: str = "config") -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source}: line {e.lineno} column {e.colno}: {e.msg}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def potts(self) -> bool:
        return self.kind.startswith("potts") or (self.kind == "surrogate-cstar"
                                                  and self.model == "potts")

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"field 'kind': unknown kind {self.kind!r}")
        for name in REQUIRED[self.kind]:
            if getattr(self, name) is None:
                raise ConfigError(f"field '{name}': required for kind {self.kind}")
        if self.q is not None and self.q <= 1.0:
            raise ConfigError("field 'q': must exceed 1")
        if self.potts and self.q is not None and not float(self.q).is_integer():
            raise ConfigError("field 'q': Potts kinds need an integer q")
        if self.kind == "sw-mix" or self.dynamics == "sw":
            if self.q is not None and not float(self.q).is_integer():
                raise ConfigError("field 'q': SW dynamics needs an integer q")
        if self.dynamics not in ("cm", "sw"):
            raise ConfigError("field 'dynamics': must be 'cm' or 'sw'")
        if self.model not in ("rc", "potts"):
            raise ConfigError("field 'model': must be 'rc' or 'potts'")
        if self.replicas < 1:
            raise ConfigError("field 'replicas': must be at least 1")
        if self.n is not None and self.n < 1:
            raise ConfigError("field 'n': must be positive")
        if self.master_seed is not None and not 0 <= self.master_seed < 1 << 64:
            raise ConfigError("field 'master_seed': must be a 64-bit unsigned integer")
        if self.gamma is not None and self.gamma <= 0:
            raise ConfigError("field 'gamma': must be positive")
        for name in ("max_steps", "stride", "threads", "surrogate_replicas", "good_set_T"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"field '{name}': must be positive")
        if self.dt <= 0 or self.dt > 1e-3:
            raise ConfigError("field 'dt': must lie in (0, 1e-3]")
        if self.kind in STOCHASTIC and self.master_seed is None:
            raise ConfigError("field 'master_seed': required for stochastic kinds (pass --seed)")
        if self.kind in ("cm-mix", "sw-mix", "potts-mix") and self.lambda0 == AUTO:
            raise ConfigError("field 'lambda0': auto-cstar applies to exit kinds only")
        if self.kind == "potts-mix" and self.m0 == AUTO:
            raise ConfigError("field 'm0': auto-cstar applies to exit kinds only")


@dataclass
class ReplicaResult:
    replica: int
    outcome: str
    steps: int
    L1: int | None = None
    good_set_violation: bool | None = None
    dominant: int | None = None
    counts: tuple | None = None
    max_gap: int | None = None
    trajectory: list | None = field(default=None, repr=False)

    def row(self, columns) -> list:
        out = []
        for c in columns:
            v = getattr(self, c)
            if isinstance(v, bool):
                v = int(v)
            elif isinstance(v, tuple):
                v = ";".join(str(x) for x in v)
            out.append(v)
        return out


# --------------------------------------------------------------------------
# Kinds
# --------------------------------------------------------------------------

def _beta(cfg: ExperimentConfig) -> float:
    return beta_critical(cfg.q) if cfg.beta is None else cfg.beta


def _thresholds_block(cfg: ExperimentConfig, resolved: dict) -> dict:
    q = cfg.q
    try:
        b = resolved.get("beta", _beta(cfg))
        out: dict = {"beta": b, "xi": xi_weight(q)}
        out["beta_u"], out["beta_c"], out["beta_s"] = beta_thresholds(q)
    except MixerError as e:
        return {"error": str(e)}
    for name, fn in (("rc", lambda: rc_thresholds(q, b)),
                     ("potts", lambda: potts_thresholds(b, q))):
        try:
            out[name] = dataclasses.asdict(fn())
        except MixerError as e:
            out[name] = {"error": str(e)}
    return out


def _rc_thr(cfg):
    try:
        return rc_thresholds(cfg.q, _beta(cfg))
    except MixerError as e:
        raise ConfigError(f"field 'beta': {e}") from None


def _potts_thr(cfg):
    try:
        return potts_thresholds(_beta(cfg), int(cfg.q))
    except MixerError as e:
        raise ConfigError(f"field 'beta': {e}") from None


def _model(cfg) -> ModelParams:
    try:
        mp = ModelParams(cfg.q, _beta(cfg), cfg.n)
        mp.p_edge
    except MixerError as e:
        raise ConfigError(str(e)) from None
    return mp


def _rc_replicas(cfg, resolved, summary, assertions):
    thr = _rc_thr(cfg)
    mp = _model(cfg)
    n = cfg.n
    exit_kind = cfg.kind == "cm-exit"
    dyn = "sw" if cfg.kind == "sw-mix" else cfg.dynamics
    gamma = 8.0 if cfg.gamma is None else cfg.gamma
    lam0 = cfg.lambda0
    if lam0 == AUTO:
        target = xi_weight(cfg.q) if cfg.target is None else cfg.target
        c = rc_c_star(cfg.q, target, gamma, cfg.surrogate_replicas,
                      rng=seed_stream(cfg.master_seed, AUX_STREAM))
        lam0 = thr.lambda_star + c / math.sqrt(n)
        resolved.update(c_star=c, target=target)
    resolved.update(lambda0=lam0, gamma=gamma, dynamics=dyn)
    steps = cfg.max_steps or (2000 if exit_kind else default_max_steps(n))
    resolved["max_steps"] = steps
    window = exit_window(thr.theta_star, gamma, n) if exit_kind else None
    T = cfg.good_set_T
    K = cfg.good_set_K
    if K is None:
        K = calibrate_good_set_K(n, mp, thr, T, cfg.pilot_replicas,
                                 seed_stream(cfg.master_seed, AUX_STREAM - 1))
    resolved["good_set_K"] = K
    v_seq = surrogate_variance_sequence(T + 1, cfg.q, _beta(cfg), thr.lambda_star)
    stride = cfg.stride or 1
    resolved["stride"] = stride

    def one(k, g):
        st = init_product(n, lam0, g)
        final, traj, code = run_dynamics(st, mp, steps, g, dyn, window)
        head = traj.records[: T + 1]
        gs = good_set_check(CmTrajectory(n, head), K, 0, v_seq,
                            thr.theta_star, cfg.q)
        done = len(traj) - 1
        if exit_kind:
            label = _EXIT_LABEL[code]
        else:
            label = classify_rc_phase(final, thr).value
        tr = None
        if cfg.kind in TRAJECTORY_KINDS:
            rows = traj.records[::stride]
            if done % stride:
                rows = np.vstack([rows, traj.records[-1:]])
            tr = rows.tolist()
        return ReplicaResult(k, label, done, final.L1, not gs.passes, trajectory=tr)

    res = run_replicas(one, cfg.replicas, cfg.master_seed, cfg.threads)
    _summarize(cfg, res, summary, assertions, resolved)
    return res


def _potts_replicas(cfg, resolved, summary, assertions):
    thr = _potts_thr(cfg)
    q, n, beta = int(cfg.q), cfg.n, _beta(cfg)
    exit_kind = cfg.kind == "potts-exit"
    gamma = 4.0 if cfg.gamma is None else cfg.gamma
    m0 = cfg.m0
    if m0 == AUTO:
        target = xi_weight(q) if cfg.target is None else cfg.target
        aux = seed_stream(cfg.master_seed, AUX_STREAM)
        A = cfg.A if cfg.A is not None else estimate_A_q(n, q, beta, 2000, aux).A
        sde = potts_sde(q, beta, A, "finite", n)
        c = find_c_star_potts(target, q, beta, gamma, cfg.dt, 4000, aux, sde=sde)
        m0 = thr.m_star + c / math.sqrt(n)
        resolved.update(c_hat_star=c, A=A, target=target)
    resolved.update(m0=m0, gamma=gamma)
    steps = cfg.max_steps or (1000 * n if exit_kind else int(math.ceil(30 * n * math.log(n))))
    resolved["max_steps"] = steps
    stride = cfg.stride or n
    resolved["stride"] = stride

    def one(k, g):
        cv, dom = init_hat_nu(n, q, m0, g)
        if exit_kind:
            fin, done, code, _ = run_glauber(cv, beta, steps, g, dom,
                                             saddle_window(thr.m_star, gamma, n))
            return ReplicaResult(k, _EXIT_LABEL[code], done, dominant=dom, counts=fin.counts)
        rec: list = []
        phase, done, gap, fin = run_until_phase(cv, beta, thr, steps, g, dom, cfg.tol,
                                                stride, rec)
        return ReplicaResult(k, str(phase), done, dominant=dom, counts=fin.counts,
                             max_gap=gap, trajectory=[[t, *c] for t, c in rec])

    res = run_replicas(one, cfg.replicas, cfg.master_seed, cfg.threads)
    _summarize(cfg, res, summary, assertions, resolved)
    return res


def _surrogate_cstar(cfg, resolved, summary, assertions):
    target = xi_weight(cfg.q) if cfg.target is None else cfg.target
    aux = seed_stream(cfg.master_seed, AUX_STREAM)
    if cfg.model == "potts":
        q, beta = int(cfg.q), _beta(cfg)
        gamma = 4.0 if cfg.gamma is None else cfg.gamma
        A = cfg.A if cfg.A is not None else estimate_A_q(cfg.n or 10_000, q, beta, 2000, aux).A
        sde = potts_sde(q, beta, A, "finite" if cfg.n else "linear", cfg.n)
        c = find_c_star_potts(target, q, beta, gamma, cfg.dt, cfg.surrogate_replicas, aux,
                              sde=sde)
        g = seed_stream(cfg.master_seed, 0)
        xi0 = g.standard_normal(cfg.replicas)
        out, st = sde.exit_outcomes(c, xi0, draw_key(g), gamma, cfg.dt, 2000.0)
        resolved.update(c_hat_star=c, A=A)
    else:
        gamma = 8.0 if cfg.gamma is None else cfg.gamma
        c = rc_c_star(cfg.q, target, gamma, cfg.surrogate_replicas, rng=aux)
        sp = surrogate_params(cfg.q)
        scale = giant_fraction_derivative(rc_thresholds(cfg.q, beta_critical(cfg.q)).lambda_star)
        steps = cfg.max_steps or 2000
        run = simulate_zbar(sp.with_offset(c, scale), gamma,
                            CrnDraws.draw(cfg.replicas, steps, seed_stream(cfg.master_seed, 0)))
        out, st = run.outcomes, run.exit_steps
        resolved.update(c_star=c)
    resolved.update(target=target, gamma=gamma)
    res = [ReplicaResult(k, _EXIT_LABEL[int(o)], int(s)) for k, (o, s) in enumerate(zip(out, st))]
    _summarize(cfg, res, summary, assertions, resolved)
    return res


def _summarize(cfg, res, summary, assertions, resolved):
    labels = [r.outcome for r in res]
    R = len(labels)
    counts: dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    summary["counts"] = counts
    summary["fractions"] = {k: v / R for k, v in counts.items()}
    if cfg.kind in ("cm-exit", "potts-exit", "surrogate-cstar"):
        pl = counts.get("ExitLeft", 0) / R
        pt = counts.get("Timeout", 0) / R
        summary.update(p_left=pl, p_right=counts.get("ExitRight", 0) / R, p_timeout=pt,
                       p_left_stderr=math.sqrt(pl * (1 - pl) / R))
        if "target" in resolved:
            tol = cfg.assert_tol if cfg.assert_tol is not None else (
                0.07 if cfg.potts else 0.05)
            assertions.append({"name": "p_left within target +/- tol",
                               "passed": abs(pl - resolved["target"]) <= tol,
                               "detail": f"p_left={pl:.4f} target={resolved['target']:.4f} tol={tol}"})
            assertions.append({"name": "p_timeout < 0.02", "passed": pt < 0.02,
                               "detail": f"p_timeout={pt:.4f}"})
    if cfg.expect_phase is not None:
        frac = counts.get(cfg.expect_phase, 0) / R
        assertions.append({"name": f"fraction {cfg.expect_phase} >= {cfg.min_fraction}",
                           "passed": frac >= cfg.min_fraction, "detail": f"fraction={frac:.4f}"})
    if any(r.good_set_violation is not None for r in res):
        summary["good_set_violations"] = sum(bool(r.good_set_violation) for r in res)


def _verify_exact(cfg, resolved, summary, assertions):
    beta = cfg.beta if cfg.beta is not None else min(1.0, float(cfg.n))
    resolved["beta"] = beta
    try:
        r = cm_exact_kernel_check(cfg.n, beta, cfg.q, sw=cfg.dynamics == "sw")
    except MixerError as e:
        raise ConfigError(str(e)) from None
    summary["stationarity_residual"] = r
    assertions.append({"name": "stationarity residual < 1e-12", "passed": r < 1e-12,
                       "detail": f"residual={r:.3e}"})
    if float(cfg.q).is_integer() and cfg.q >= 2 and cfg.n <= 10:
        g = glauber_balance_check(cfg.n, int(cfg.q), beta)
        summary["glauber_balance_residual"] = g
        assertions.append({"name": "Glauber detailed balance residual < 1e-12",
                           "passed": g < 1e-12, "detail": f"residual={g:.3e}"})


def _thresholds_kind(cfg, resolved, summary, assertions):
    try:
        u, c, s = beta_thresholds(cfg.q)
    except MixerError as e:
        raise ConfigError(f"field 'q': {e}") from None
    summary.update(beta_u=u, beta_c=c, beta_s=s, xi=xi_weight(cfg.q))
    assertions.append({"name": "beta_u < beta_c < beta_s", "passed": u < c < s,
                       "detail": f"{u!r} < {c!r} < {s!r}"})


# --------------------------------------------------------------------------
# Runner
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    manifest: dict
    replicas: list
    out: Path

    @property
    def passed(self) -> bool:
        return all(a["passed"] for a in self.manifest["assertions"])


def _write_csv(path: Path, header_line: str, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        fh.write(header_line + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Run one experiment and write its bundle to ``config.out``."""
    config.validate()
    t0 = time.perf_counter()
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    resolved: dict = {}
    summary: dict = {}
    assertions: list = []
    handlers = {"thresholds": _thresholds_kind, "verify-exact": _verify_exact,
                "surrogate-cstar": _surrogate_cstar, "cm-exit": _rc_replicas,
                "cm-mix": _rc_replicas, "sw-mix": _rc_replicas,
                "potts-exit": _potts_replicas, "potts-mix": _potts_replicas}
    res = handlers[config.kind](config, resolved, summary, assertions) or []
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = []
        if config.kind in REPLICA_COLUMNS:
            cols = REPLICA_COLUMNS[config.kind]
            _write_csv(out / "replicas.csv",
                       f"# schema=mixer-replicas/{SCHEMA_VERSION} kind={config.kind}",
                       cols, [r.row(cols) for r in res])
            files.append("replicas.csv")
        if config.kind in TRAJECTORY_KINDS:
            tdir = out / "trajectories"
            tdir.mkdir(exist_ok=True)
            tcols = (("t",) + tuple(f"c{i}" for i in range(int(config.q)))
                     if config.kind == "potts-mix" else RECORD_COLUMNS)
            for r in res:
                name = f"trajectories/replica_{r.replica:05d}.csv"
                _write_csv(out / name,
                           f"# schema=mixer-trajectory/{SCHEMA_VERSION} kind={config.kind}",
                           tcols, r.trajectory)
                files.append(name)
        manifest = {
            "schema": f"mixer-manifest/{SCHEMA_VERSION}",
            "version": __version__,
            "kind": config.kind,
            "config": config.to_dict(),
            "resolved": resolved,
            "thresholds": _thresholds_block(config, resolved),
            "backend": _backend.NAME,
            "threads": thread_count(config.threads),
            "started_at": started,
            "wall_clock_seconds": time.perf_counter() - t0,
            "summary": summary,
            "assertions": assertions,
            "files": files,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable))
    except OSError as e:
        raise IoError(f"cannot write results to {out}: {e}") from e
    return RunResult(manifest, res, out)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


# --------------------------------------------------------------------------
# Command line
# --------------------------------------------------------------------------

def _parse_overrides(extra: list) -> dict:
    out: dict = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if tok.startswith("--"):
            key = tok[2:]
            if "=" in key:
                key, val = key.split("=", 1)
            else:
                if i + 1 >= len(extra):
                    raise ConfigError(f"override {tok} needs a value")
                i += 1
                val = extra[i]
        elif "=" in tok:
            key, val = tok.split("=", 1)
        else:
            raise ConfigError(f"cannot parse override {tok!r}")
        key = key.replace("-", "_")
        if key not in FIELDS or key == "kind":
            raise ConfigError(f"unknown field '{key}' in overrides")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixer", description="Mean-field Potts / random-cluster "
                                "mixing experiments.")
    p.add_argument("--version", action="version", version=f"mixer {__version__}")
    sub = p.add_subparsers(dest="kind", required=True)
    for k in KINDS:
        s = sub.add_parser(k, help=f"run a {k} experiment")
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--seed", type=int, help="64-bit master seed")
        s.add_argument("--replicas", type=int)
        s.add_argument("--out", help="output directory")
        s.add_argument("--threads", type=int, help="worker threads (default MIXER_THREADS)")
        s.add_argument("--assert", dest="check", action="store_true",
                       help="exit with code 3 if an acceptance check fails")
    return p


def config_from_args(args, extra: list) -> ExperimentConfig:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    if d.get("kind", args.kind) != args.kind:
        raise ConfigError(f"{path}: field 'kind' is {d['kind']!r} but subcommand is {args.kind!r}")
    d["kind"] = args.kind
    d.update(_parse_overrides(extra))
    for name in ("seed", "replicas", "out", "threads"):
        v = getattr(args, name)
        if v is not None:
            d["master_seed" if name == "seed" else name] = v
    return ExperimentConfig.from_dict(d)


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = config_from_args(args, extra)
        result = run_experiment(cfg)
    except ConfigError as e:
        print(f"mixer: config error: {e}", file=sys.stderr)
        return 2
    except IoError as e:
        print(f"mixer: {e}", file=sys.stderr)
        return 1
    m = result.manifest
    print(json.dumps({"out": str(result.out), "summary": m["summary"],
                      "wall_clock_seconds": round(m["wall_clock_seconds"], 3)},
                     default=_jsonable))
    for a in m["assertions"]:
        print(f"{'PASS' if a['passed'] else 'FAIL'}  {a['name']}  ({a['detail']})")
    if args.check and not result.passed:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
