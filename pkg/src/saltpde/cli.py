"""Experiment orchestration: simulate / verify / converge / stability.

Configs are flat key-value text files::

    # lines starting with '#' are comments
    model = ccf
    n = 256
    dt = 1e-3
    t_end = 0.5
    seed = 1

Every run writes a manifest echoing all effective parameters (defaults
included) in the same grammar, so a manifest alone reproduces the run
byte for byte.  All floats are serialised with full round-trip precision.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields, replace

import numpy as np

from .estimates import ESTIMATE_IDS, run_estimates, summary_table
from .noise import sample_path
from .solver import (CflError, SimConfig, run_path, stability_experiment,
                     write_state_snapshot, write_trajectory)


@dataclass
class ExperimentSpec:
    command: str = ""
    sim: SimConfig = field(default_factory=SimConfig)
    ensemble: int = 1
    out: str = "out"
    workers: int = 1
    eps_ladder: tuple = ()
    dt_ladder: tuple = ()
    estimates: str = "all"
    delta: float = 1e-6
    perturb_mode: int = 1
    save_states: int = 0


_REQUIRED = ("model", "n", "dt", "t_end", "seed")

# key -> (target, converter); target "sim" lands on SimConfig
_KEYS = {
    "command": ("spec", str),
    "model": ("sim", str),
    "n": ("sim", int),
    "dt": ("sim", float),
    "t_end": ("sim", float),
    "s": ("sim", float),
    "epsilon": ("sim", float),
    "cutoff_r": ("sim", float),
    "noise_k": ("sim", int),
    "noise_s_max": ("sim", float),
    "noise_decay": ("sim", str),
    "noise_decay_param": ("sim", float),
    "seed": ("sim", int),
    "n_stop": ("sim", float),
    "blowup_factor": ("sim", float),
    "record_every": ("sim", int),
    "ic": ("sim", str),
    "ic_amplitude": ("sim", float),
    "linear_a": ("sim", float),
    "scheme": ("sim", str),
    "ensemble": ("spec", int),
    "out": ("spec", str),
    "workers": ("spec", int),
    "eps_ladder": ("spec", "floats"),
    "dt_ladder": ("spec", "floats"),
    "estimates": ("spec", str),
    "delta": ("spec", float),
    "perturb_mode": ("spec", int),
    "save_states": ("spec", int),
}

_DEFAULT_S = {"sch2": 6.0, "ccf": 4.0, "sqg": 4.5, "linear": 1.0}


class ConfigError(ValueError):
    pass


def _parse_floats(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(tok) for tok in text.split(","))


def parse_config(path, command=None):
    """Read and fully validate a config file; all defaults are filled in.

    Errors carry the offending line number.  The returned spec serialises
    back to an identical manifest (round-trip identity).
    """
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError("%s line %d: expected 'key = value', got %r"
                                  % (path, lineno, stripped))
            key, _, val = stripped.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _KEYS:
                raise ConfigError("%s line %d: unknown key %r"
                                  % (path, lineno, key))
            if key in raw:
                raise ConfigError("%s line %d: duplicate key %r"
                                  % (path, lineno, key))
            target, conv = _KEYS[key]
            try:
                raw[key] = _parse_floats(val) if conv == "floats" else conv(val)
            except ValueError:
                raise ConfigError("%s line %d: bad value %r for key %r"
                                  % (path, lineno, val, key)) from None

    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError("%s: missing required key %r" % (path, key))

    if command is not None:
        stated = raw.get("command")
        if stated is not None and stated != command:
            raise ConfigError("%s: config was written for command %r, invoked as %r"
                              % (path, stated, command))

    model = raw["model"]
    if model not in _DEFAULT_S:
        raise ConfigError("%s: unknown model %r (sch2 | ccf | sqg | linear)"
                          % (path, model))

    sim = SimConfig(model=model, n=raw["n"], dt=raw["dt"], t_end=raw["t_end"],
                    seed=raw["seed"])
    sim.s = raw.get("s", _DEFAULT_S[model])
    sim.epsilon = raw.get("epsilon", 0.0625)
    sim.cutoff_r = raw.get("cutoff_r", 1e6)
    sim.noise_k = raw.get("noise_k", 4)
    sim.noise_s_max = raw.get("noise_s_max", sim.s + 2.0)
    sim.noise_decay = raw.get("noise_decay", "geometric")
    sim.noise_decay_param = raw.get("noise_decay_param", 0.5)
    sim.n_stop = raw.get("n_stop", 1e6)
    sim.blowup_factor = raw.get("blowup_factor", 50.0)
    sim.ic = raw.get("ic", "smooth")
    sim.ic_amplitude = raw.get("ic_amplitude", 0.1)
    sim.linear_a = raw.get("linear_a", 1.0)
    sim.scheme = raw.get("scheme", "ito_em")

    try:
        sim.validate()
        n_steps = sim.n_steps()
    except ValueError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from None
    sim.record_every = raw.get("record_every", max(1, n_steps // 512))
    if sim.record_every < 1:
        raise ConfigError("%s: record_every must be >= 1" % path)

    spec = ExperimentSpec(command=command or raw.get("command", ""), sim=sim)
    spec.ensemble = raw.get("ensemble", 1)
    spec.out = raw.get("out", "out")
    spec.workers = raw.get("workers", 1)
    spec.eps_ladder = raw.get("eps_ladder", ())
    spec.dt_ladder = raw.get("dt_ladder", ())
    spec.estimates = raw.get("estimates", "all")
    spec.delta = raw.get("delta", 1e-6)
    spec.perturb_mode = raw.get("perturb_mode", 1)
    spec.save_states = raw.get("save_states", 0)
    if spec.ensemble < 1:
        raise ConfigError("%s: ensemble must be >= 1" % path)
    if spec.workers < 1:
        raise ConfigError("%s: workers must be >= 1" % path)
    return spec


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def manifest_lines(spec):
    """Complete, re-parseable key-value dump of the effective parameters."""
    sim = spec.sim
    pairs = [("command", spec.command)] if spec.command else []
    for f in dc_fields(SimConfig):
        pairs.append((f.name, getattr(sim, f.name)))
    for key in ("ensemble", "out", "workers", "eps_ladder", "dt_ladder",
                "estimates", "delta", "perturb_mode", "save_states"):
        pairs.append((key, getattr(spec, key)))
    return ["%s = %s" % (k, _fmt(v)) for k, v in pairs]


def write_manifest(spec, filename):
    with open(filename, "w") as fh:
        fh.write("\n".join(manifest_lines(spec)) + "\n")


# ---------------------------------------------------------------------------
# simulate

def _run_member(args):
    cfg, keep_state = args
    return run_path(cfg, keep_final_state=bool(keep_state))


def cmd_simulate(spec):
    """Run the ensemble; one trajectory file per member plus statistics."""
    os.makedirs(spec.out, exist_ok=True)
    write_manifest(spec, os.path.join(spec.out, "manifest.txt"))
    cfgs = [replace(spec.sim, seed=spec.sim.seed + i)
            for i in range(spec.ensemble)]
    jobs = [(cfg, spec.save_states) for cfg in cfgs]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_run_member, jobs))
    else:
        records = [_run_member(job) for job in jobs]

    for cfg, rec in zip(cfgs, records):
        write_trajectory(rec, os.path.join(spec.out, "traj_%d.txt" % cfg.seed))
        if spec.save_states and rec.final_state is not None:
            write_state_snapshot(rec.final_state,
                                 os.path.join(spec.out,
                                              "state_%d.txt" % cfg.seed))

    stats_path = os.path.join(spec.out, "stats.txt")
    final_hs = np.array([rec.hs_norms[-1] for rec in records])
    with open(stats_path, "w") as fh:
        fh.write("seed final_t final_Hs final_V stopped tau\n")
        for cfg, rec in zip(cfgs, records):
            fh.write("%d %s %s %s %d %s\n"
                     % (cfg.seed, repr(rec.times[-1]), repr(rec.hs_norms[-1]),
                        repr(rec.v_norms[-1]), int(rec.stopped), repr(rec.tau)))
        fh.write("# mean_final_Hs = %s\n" % repr(float(np.mean(final_hs))))
        fh.write("# min_final_Hs = %s\n" % repr(float(np.min(final_hs))))
        fh.write("# max_final_Hs = %s\n" % repr(float(np.max(final_hs))))
        fh.write("# n_stopped = %d\n" % sum(int(r.stopped) for r in records))
    return 0


# ---------------------------------------------------------------------------
# converge

def _fit_order(hs, ds):
    hs = np.asarray(hs, dtype=float)
    ds = np.maximum(np.asarray(ds, dtype=float), 1e-300)
    return float(np.polyfit(np.log(hs), np.log(ds), 1)[0])


def eps_convergence(spec):
    """Distances between consecutive eps-rungs at the final time."""
    ladder = sorted(spec.eps_ladder, reverse=True)
    if len(ladder) < 3:
        raise ConfigError("eps ladder needs at least 3 rungs")
    finals = []
    ops = None
    for eps in ladder:
        cfg = replace(spec.sim, epsilon=eps)
        rec = run_path(cfg)
        if ops is None:
            ops = cfg.build_ops()
        finals.append(rec.final_state)
    dists = [ops.z_norm(a - b) for a, b in zip(finals, finals[1:])]
    order = _fit_order(ladder[:-1], dists)
    return ladder, dists, order


def dt_consistency(spec):
    """EM(Ito) vs Heun(Stratonovich) distance at T down the dt ladder."""
    ladder = sorted(spec.dt_ladder, reverse=True)
    if len(ladder) < 3:
        raise ConfigError("dt ladder needs at least 3 rungs")
    dists = []
    ops = None
    for dt in ladder:
        cfg = replace(spec.sim, dt=dt)
        rec_em = run_path(replace(cfg, scheme="ito_em"))
        rec_he = run_path(replace(cfg, scheme="strat_heun"))
        if ops is None:
            ops = cfg.build_ops()
        dists.append(ops.z_norm(rec_em.final_state - rec_he.final_state))
    order = _fit_order(ladder, dists)
    return ladder, dists, order


def linear_strong_error(spec):
    """EM strong error against the exact exponential solution."""
    ladder = sorted(spec.dt_ladder, reverse=True)
    if len(ladder) < 3:
        raise ConfigError("dt ladder needs at least 3 rungs")
    a = spec.sim.linear_a
    x0 = spec.sim.ic_amplitude
    errors = []
    for dt in ladder:
        cfg = replace(spec.sim, dt=dt, scheme="ito_em")
        errs = []
        for member in range(spec.ensemble):
            mcfg = replace(cfg, seed=cfg.seed + member)
            n_steps = mcfg.n_steps()
            path = sample_path(mcfg.seed, mcfg.dt, n_steps, mcfg.path_k())
            rec = run_path(mcfg, path=path)
            ops = mcfg.build_ops()
            exact = ops.exact_solution(x0, path.endpoint()[0])
            errs.append(abs(ops.value(rec.final_state) - exact))
        errors.append(float(np.mean(errs)))
    order = _fit_order(ladder, errors)
    return ladder, errors, order


def cmd_converge(spec):
    os.makedirs(spec.out, exist_ok=True)
    write_manifest(spec, os.path.join(spec.out, "manifest.txt"))
    lines = []
    if spec.eps_ladder:
        ladder, dists, order = eps_convergence(spec)
        lines.append("# eps_order = %s" % repr(order))
        lines.append("eps_i eps_next distance")
        for i, d in enumerate(dists):
            lines.append("%s %s %s" % (repr(ladder[i]), repr(ladder[i + 1]),
                                       repr(float(d))))
    if spec.dt_ladder:
        if spec.sim.model == "linear":
            ladder, errs, order = linear_strong_error(spec)
            lines.append("# strong_order_em = %s" % repr(order))
            lines.append("dt strong_error")
            for dt, e in zip(ladder, errs):
                lines.append("%s %s" % (repr(dt), repr(float(e))))
        else:
            ladder, dists, order = dt_consistency(spec)
            lines.append("# dt_order = %s" % repr(order))
            lines.append("dt em_heun_distance")
            for dt, d in zip(ladder, dists):
                lines.append("%s %s" % (repr(dt), repr(float(d))))
    if not lines:
        raise ConfigError("converge needs eps_ladder and/or dt_ladder")
    report = "\n".join(lines) + "\n"
    with open(os.path.join(spec.out, "converge.txt"), "w") as fh:
        fh.write(report)
    sys.stdout.write(report)
    return 0


# ---------------------------------------------------------------------------
# verify

def cmd_verify(spec):
    os.makedirs(spec.out, exist_ok=True)
    write_manifest(spec, os.path.join(spec.out, "manifest.txt"))
    if spec.estimates.strip() == "all":
        ids = list(ESTIMATE_IDS)
    else:
        ids = [tok.strip() for tok in spec.estimates.split(",") if tok.strip()]
    reports = run_estimates(ids)
    for rep in reports:
        rep.write(os.path.join(spec.out, "estimate_%s.txt" % rep.estimate_id))
    sys.stdout.write(summary_table(reports) + "\n")
    return 0 if all(rep.passed for rep in reports) else 1


# ---------------------------------------------------------------------------
# stability

def perturbed_state(X0, delta, mode):
    """Add delta*cos(mode*x) (first coordinate in 2D) to the leading field."""
    from . import spectral as sp
    grid = X0.grid
    if grid.dim == 1:
        bump = sp.from_values(grid, delta * np.cos(mode * grid.x))
    else:
        x1, _ = grid.nodes()
        bump = sp.from_values(grid, delta * np.cos(mode * x1))
    fields = (X0.fields[0] + bump,) + X0.fields[1:]
    from .models import ModelState
    return ModelState(X0.kind, fields)


def cmd_stability(spec):
    os.makedirs(spec.out, exist_ok=True)
    write_manifest(spec, os.path.join(spec.out, "manifest.txt"))
    cfg = spec.sim
    cfg.validate()
    grid = cfg.grid()
    X0 = cfg.initial_state(grid)
    Y0 = perturbed_state(X0, spec.delta, spec.perturb_mode)
    rep = stability_experiment(cfg, X0, Y0)
    lines = ["# delta = %s" % repr(spec.delta),
             "# perturb_mode = %d" % spec.perturb_mode,
             "distance0 sup_distance ratio tau_joint",
             "%s %s %s %s" % (repr(rep.distance0), repr(rep.sup_distance),
                              repr(rep.ratio), repr(rep.tau_joint))]
    report = "\n".join(lines) + "\n"
    with open(os.path.join(spec.out, "stability.txt"), "w") as fh:
        fh.write(report)
    sys.stdout.write(report)
    return 0


# ---------------------------------------------------------------------------

_COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify,
             "converge": cmd_converge, "stability": cmd_stability}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="saltpde",
        description="transport-noise fluid PDE simulation and estimate checks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="flat key-value config file")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="override worker count")
    args = parser.parse_args(argv)

    try:
        spec = parse_config(args.config, command=args.command)
    except ConfigError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2
    if args.seed is not None:
        spec.sim.seed = args.seed
    if args.out is not None:
        spec.out = args.out
    if args.workers is not None:
        spec.workers = args.workers
    try:
        return _COMMANDS[args.command](spec)
    except (ConfigError, ValueError, CflError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
