"""Time integration of the cut-off, regularised problem.

The reference scheme is Euler-Maruyama on the Ito form

    X' = X + chi_R(||X||_V)^2 (b + g_eps)(X) dt
           + chi_R(||X||_V) sum_k h_eps^k(X) dW_k,

where chi_R is a smooth cut-off equal to 1 on [0,R] and 0 beyond 2R, and
||.||_V is the model's blow-up functional.  A Heun predictor-corrector on
the Stratonovich form (no Ito correction term) is provided purely for
cross-validation of the stochastic-calculus bookkeeping.

Stopping is checked every step against the H^s norm threshold (the
discrete analogue of the first-exit stopping time), against a blow-up
indicator (growth of the V-functional beyond a configurable multiple of
its initial value), and against loss of finiteness.  A CFL-style guard
aborts runs whose advection speed outruns the grid.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .models import S_THRESHOLD, make_initial_state, make_ops
from .noise import build_basis_1d, build_basis_sqg, sample_path
from .spectral import Grid


def _smooth_step(t):
    # C-infinity step: exactly 0 for t <= 0, exactly 1 for t >= 1
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = math.exp(-1.0 / t)
    b = math.exp(-1.0 / (1.0 - t))
    return a / (a + b)


def chi_cutoff(v, R):
    """Smooth cut-off: 1 on [0, R], monotone transition, 0 beyond 2R."""
    if R <= 1.0:
        raise ValueError("cut-off radius must satisfy R > 1, got %r" % (R,))
    if v < 0.0:
        raise ValueError("cut-off argument must be >= 0")
    return _smooth_step((2.0 * R - v) / R)


class CflError(RuntimeError):
    """dt * max|velocity| exceeded half a grid spacing."""


@dataclass
class SimConfig:
    """Everything a single trajectory needs; defaults match parse_config."""

    model: str = "ccf"
    n: int = 128
    dt: float = 1e-3
    t_end: float = 0.1
    s: float = 4.0
    epsilon: float = 0.0625
    cutoff_r: float = 1e6
    noise_k: int = 4
    noise_s_max: float = 6.0
    noise_decay: str = "geometric"
    noise_decay_param: float = 0.5
    seed: int = 0
    n_stop: float = 1e6
    blowup_factor: float = 50.0
    record_every: int = 1
    ic: str = "smooth"
    ic_amplitude: float = 0.1
    linear_a: float = 1.0
    scheme: str = "ito_em"

    def validate(self):
        if self.model not in ("sch2", "ccf", "sqg", "linear"):
            raise ValueError("unknown model %r" % (self.model,))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0,1)")
        if self.cutoff_r <= 1.0:
            raise ValueError("cutoff_r must exceed 1")
        if self.noise_k < 0:
            raise ValueError("noise_k must be >= 0")
        if self.model == "linear" and self.noise_k > 1:
            raise ValueError("the linear test SDE drives a single Brownian "
                             "motion; noise_k must be 0 or 1")
        if self.model in S_THRESHOLD and self.s <= S_THRESHOLD[self.model]:
            raise ValueError(
                "s = %r violates the %s well-posedness requirement s > %s"
                % (self.s, self.model, S_THRESHOLD[self.model]))
        if self.scheme not in ("ito_em", "strat_heun"):
            raise ValueError("scheme must be ito_em or strat_heun")
        if self.n_stop <= 0:
            raise ValueError("n_stop must be positive")
        return self

    def n_steps(self):
        steps = int(round(self.t_end / self.dt))
        if abs(steps * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError("t_end must be an integer multiple of dt")
        return steps

    def grid(self):
        return Grid(self.n, dim=2 if self.model == "sqg" else 1)

    def build_basis(self, grid):
        if self.model == "linear":
            return None
        if self.model == "sqg":
            return build_basis_sqg(grid, self.noise_k, self.noise_s_max,
                                   self.noise_decay, self.noise_decay_param)
        return build_basis_1d(grid, self.noise_k, self.noise_s_max,
                              self.noise_decay, self.noise_decay_param)

    def build_ops(self, grid=None, basis=None):
        grid = grid if grid is not None else self.grid()
        if basis is None:
            basis = self.build_basis(grid)
        return make_ops(self.model, grid, self.s, basis, self.epsilon,
                        self.linear_a)

    def initial_state(self, grid):
        return make_initial_state(self.model, grid, self.ic,
                                  self.ic_amplitude, self.seed)

    def path_k(self):
        # the linear model consumes one Brownian component
        return max(self.noise_k, 1) if self.model == "linear" else self.noise_k


@dataclass
class TrajectoryRecord:
    """Sampled norms of one trajectory plus its stopping data."""

    model: str = ""
    times: list = field(default_factory=list)
    hs_norms: list = field(default_factory=list)
    v_norms: list = field(default_factory=list)
    stopped: bool = False
    tau: float = 0.0
    stop_reason: str = "end"
    final_state: object = None

    def add(self, t, hs, v):
        self.times.append(float(t))
        self.hs_norms.append(float(hs))
        self.v_norms.append(float(v))


def step_ito_em(X, ops, dw, dt, R):
    """One Euler-Maruyama step of the cut-off Ito-form problem.

    dw holds the Brownian increments of this step (one per noise index).
    A state with chi_R = 0 (V-norm beyond 2R) is an exact fixed point.
    """
    chi = chi_cutoff(ops.v_norm(X), R)
    if chi == 0.0:
        return X
    drift = ops.b(X) + ops.g_eps(X)
    out = X + (chi * chi * dt) * drift
    for k in range(len(dw)):
        if dw[k] != 0.0:
            out = out + (chi * dw[k]) * ops.h_eps_k(X, k)
    return out


def step_strat_heun(X, ops, dw, dt, R):
    """Heun (midpoint-predictor) step of the cut-off Stratonovich form.

    Uses the transport drift only; the Ito correction is generated by the
    scheme itself, which is exactly what the cross-validation against
    step_ito_em exercises.
    """
    def drift(Y):
        chi = chi_cutoff(ops.v_norm(Y), R)
        return (chi * chi) * (ops.b(Y) + ops.g_eps_transport(Y)), chi

    f0, chi0 = drift(X)
    pred = X + dt * f0
    for k in range(len(dw)):
        if dw[k] != 0.0:
            pred = pred + (chi0 * dw[k]) * ops.h_eps_k(X, k)

    f1, chi1 = drift(pred)
    out = X + (0.5 * dt) * (f0 + f1)
    for k in range(len(dw)):
        if dw[k] != 0.0:
            out = out + (0.5 * dw[k]) * (chi0 * ops.h_eps_k(X, k)
                                         + chi1 * ops.h_eps_k(pred, k))
    return out


_STEPPERS = {"ito_em": step_ito_em, "strat_heun": step_strat_heun}


def run_path(cfg, path=None, X0=None, keep_final_state=True):
    """Integrate one trajectory; returns the TrajectoryRecord.

    Stops at the first sample where the H^s norm reaches n_stop (discrete
    first-exit time), when the V-functional grows past blowup_factor times
    its initial value, or when the state stops being finite.
    """
    cfg.validate()
    grid = cfg.grid()
    basis = cfg.build_basis(grid)
    ops = cfg.build_ops(grid, basis)
    n_steps = cfg.n_steps()
    if path is None:
        path = sample_path(cfg.seed, cfg.dt, n_steps, cfg.path_k())
    elif path.n_steps < n_steps or path.K < cfg.path_k():
        raise ValueError("supplied Brownian path is too short for this run")

    X = X0 if X0 is not None else cfg.initial_state(grid)
    step = _STEPPERS[cfg.scheme]
    rec = TrajectoryRecord(model=cfg.model)

    hs = ops.x_norm(X)
    v = ops.v_norm(X)
    v_ref = max(v, 1e-30)
    rec.add(0.0, hs, v)
    if hs >= cfg.n_stop:
        rec.stopped = True
        rec.tau = 0.0
        rec.stop_reason = "threshold"
        rec.final_state = X if keep_final_state else None
        return rec

    cfl_limit = 0.5 * grid.dx
    t = 0.0
    for nstep in range(n_steps):
        vel = ops.max_velocity(X)
        if cfg.dt * vel > cfl_limit:
            raise CflError(
                "CFL guard: dt*max|u| = %.3e exceeds 0.5*dx = %.3e at t=%.6g"
                % (cfg.dt * vel, cfl_limit, t))
        X = step(X, ops, path.increments[nstep], cfg.dt, cfg.cutoff_r)
        t = (nstep + 1) * cfg.dt
        if not X.is_finite():
            rec.stopped = True
            rec.tau = t
            rec.stop_reason = "diverged"
            break
        hs = ops.x_norm(X)
        v = ops.v_norm(X)
        if (nstep + 1) % cfg.record_every == 0 or nstep + 1 == n_steps:
            rec.add(t, hs, v)
        if hs >= cfg.n_stop:
            if rec.times[-1] != t:
                rec.add(t, hs, v)
            rec.stopped = True
            rec.tau = t
            rec.stop_reason = "threshold"
            break
        if v >= cfg.blowup_factor * v_ref:
            if rec.times[-1] != t:
                rec.add(t, hs, v)
            rec.stopped = True
            rec.tau = t
            rec.stop_reason = "blowup_indicator"
            break
    else:
        rec.stopped = False
        rec.tau = cfg.t_end
        rec.stop_reason = "end"
    rec.final_state = X if keep_final_state else None
    return rec


@dataclass
class StabilityReport:
    distance0: float
    sup_distance: float
    ratio: float          # nan when distance0 == 0
    tau_joint: float
    n_steps_used: int


def stability_experiment(cfg, X0, Y0, path=None):
    """Same-noise two-trajectory experiment behind the pathwise-stability
    estimate: both runs share the Brownian path and are stopped at the
    joint first-exit time from the ball of radius M+2 in the H^s norm,
    M = max of the initial norms.  Reports sup_t ||X - Y||_{H^{s-2}} and
    its ratio to the initial distance.
    """
    cfg.validate()
    grid = cfg.grid()
    basis = cfg.build_basis(grid)
    ops = cfg.build_ops(grid, basis)
    n_steps = cfg.n_steps()
    if path is None:
        path = sample_path(cfg.seed, cfg.dt, n_steps, cfg.path_k())

    M = max(ops.x_norm(X0), ops.x_norm(Y0))
    threshold = M + 2.0
    step = _STEPPERS[cfg.scheme]

    d0 = ops.z_norm(X0 - Y0)
    sup_d = d0
    X, Y = X0, Y0
    t = 0.0
    used = 0
    for nstep in range(n_steps):
        dw = path.increments[nstep]
        X = step(X, ops, dw, cfg.dt, cfg.cutoff_r)
        Y = step(Y, ops, dw, cfg.dt, cfg.cutoff_r)
        t = (nstep + 1) * cfg.dt
        used = nstep + 1
        sup_d = max(sup_d, ops.z_norm(X - Y))
        if ops.x_norm(X) > threshold or ops.x_norm(Y) > threshold:
            break
    ratio = sup_d / d0 if d0 > 0.0 else float("nan")
    return StabilityReport(distance0=d0, sup_distance=sup_d, ratio=ratio,
                           tau_joint=t, n_steps_used=used)


# ---------------------------------------------------------------------------
# trajectory serialisation (columnar text, full round-trip precision)

def write_trajectory(rec, filename):
    with open(filename, "w") as fh:
        fh.write("# model = %s\n" % rec.model)
        fh.write("# stopped = %d\n" % int(rec.stopped))
        fh.write("# tau = %s\n" % repr(float(rec.tau)))
        fh.write("# stop_reason = %s\n" % rec.stop_reason)
        fh.write("t Hs_norm V_norm stopped\n")
        n = len(rec.times)
        for i in range(n):
            flag = int(rec.stopped and i == n - 1)
            fh.write("%s %s %s %d\n" % (repr(rec.times[i]),
                                        repr(rec.hs_norms[i]),
                                        repr(rec.v_norms[i]), flag))


def read_trajectory(filename):
    rec = TrajectoryRecord()
    with open(filename) as fh:
        lines = fh.read().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            meta[key.strip()] = val.strip()
        elif line and not line[0].isalpha():
            body.append(line.split())
    rec.model = meta.get("model", "")
    rec.stopped = bool(int(meta.get("stopped", "0")))
    rec.tau = float(meta.get("tau", "0"))
    rec.stop_reason = meta.get("stop_reason", "end")
    for row in body:
        rec.add(float(row[0]), float(row[1]), float(row[2]))
    return rec


def write_state_snapshot(state, filename):
    """Flat coefficient table: one row per mode and field component."""
    from .models import FIELD_NAMES
    with open(filename, "w") as fh:
        fh.write("# model = %s\n" % state.kind)
        fh.write("field k1 k2 re im\n")
        for name, F in zip(FIELD_NAMES[state.kind], state.fields):
            g = F.grid
            it = np.ndindex(*g.shape)
            for idx in it:
                k1 = int(g.k_axes[0][idx])
                k2 = int(g.k_axes[1][idx]) if g.dim == 2 else 0
                c = F.coeffs[idx]
                fh.write("%s %d %d %s %s\n"
                         % (name, k1, k2, repr(float(c.real)), repr(float(c.imag))))
