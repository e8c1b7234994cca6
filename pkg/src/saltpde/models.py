"""Operator splittings of the three transport-noise fluid models.

Each model is written in Ito form as

    dX = (b(X) + g(X)) dt + sum_k h^k(X) dW_k,

with a regular drift b, a singular drift g = g_transport + ito_correction,
and transport-type diffusion h^k built from the Lie operator L_{xi_k}.
The mollified family (g_eps, h_eps^k) inserts the bump mollifier J_eps
into the compositions exactly as the regularised scheme prescribes, e.g.
-J[Ju * Ju_x] for the quadratic terms and a J^3 factor in front of the
second-order noise sum.

Models:
  sch2  -- two-component Camassa-Holm system, state (u, eta) on the 1D torus
  ccf   -- nonlocal transport equation with velocity H(theta), 1D
  sqg   -- surface quasi-geostrophic equation with u = Riesz-perp(theta), 2D
  linear -- scalar test SDE dX = a X o dW (degenerate model for scheme checks)
"""

import numpy as np

from . import spectral as sp
from .lie import lie_derivative, lie_second
from .spectral import (SpectralField, dealiased_product, derivative, gradient,
                       hilbert_transform, hs_inner, homogeneous_inner,
                       homogeneous_norm, lipschitz_norm, mollifier_symbol,
                       riesz_component, riesz_perp, sobolev_norm, sup_norm,
                       to_grid, zero_field)

FIELD_NAMES = {"sch2": ("u", "eta"), "ccf": ("theta",),
               "sqg": ("theta",), "linear": ("theta",)}

S_THRESHOLD = {"sch2": 5.5, "ccf": 3.5, "sqg": 4.0}


class ModelState:
    """Tagged state: SCH2 holds (u, eta), the scalar models hold theta."""

    __slots__ = ("kind", "fields")

    def __init__(self, kind, fields):
        if kind not in FIELD_NAMES:
            raise ValueError("unknown model kind %r" % (kind,))
        fields = tuple(fields)
        if len(fields) != len(FIELD_NAMES[kind]):
            raise ValueError("%s state needs %d fields" %
                             (kind, len(FIELD_NAMES[kind])))
        grid = fields[0].grid
        for f in fields[1:]:
            if not f.grid.compatible(grid):
                raise ValueError("state fields live on different grids")
        if kind == "sqg":
            if grid.dim != 2:
                raise ValueError("sqg state needs a 2D grid")
            if abs(fields[0].coeffs[0, 0]) > 1e-12 * (
                    1.0 + np.max(np.abs(fields[0].coeffs))):
                raise ValueError("sqg state must have zero mean")
        elif grid.dim != 1:
            raise ValueError("%s state needs a 1D grid" % kind)
        self.kind = kind
        self.fields = fields

    @property
    def grid(self):
        return self.fields[0].grid

    @property
    def u(self):
        return self.fields[0]

    @property
    def eta(self):
        return self.fields[1]

    @property
    def theta(self):
        return self.fields[0]

    def copy(self):
        return ModelState(self.kind, tuple(f.copy() for f in self.fields))

    def is_finite(self):
        return all(np.all(np.isfinite(f.coeffs)) for f in self.fields)

    def __add__(self, other):
        return ModelState(self.kind,
                          tuple(a + b for a, b in zip(self.fields, other.fields)))

    def __sub__(self, other):
        return ModelState(self.kind,
                          tuple(a - b for a, b in zip(self.fields, other.fields)))

    def __mul__(self, a):
        return ModelState(self.kind, tuple(f * a for f in self.fields))

    __rmul__ = __mul__


def _wrong_variant(expected, got):
    return ValueError("expected a %s state, got %s" % (expected, got))


class Sch2Ops:
    """Two-component CH splitting.

    b(u,eta) = (-dx D^-2(u^2/2 + u_x^2 + eta^2/2), -eta*u_x)
    g        = (-u*u_x + D^-2 sum L^2(D^2 u)/2,  -u*eta_x + sum L^2(eta)/2)
    h^k      = (-D^-2 L_k(D^2 u), -L_k(eta))
    """

    kind = "sch2"

    def __init__(self, grid, s, basis, eps):
        if grid.dim != 1:
            raise ValueError("sch2 lives on the 1D torus")
        self.grid = grid
        self.s = float(s)
        self.basis = basis
        self.eps = float(eps)
        self._jhat = mollifier_symbol(grid, self.eps)
        self._d2 = 1.0 + grid.ksq          # D^2 symbol
        self._d2inv = 1.0 / self._d2

    # -- symbol helpers
    def _J(self, F):
        return sp.apply_multiplier(F, self._jhat)

    def _J3(self, F):
        return sp.apply_multiplier(F, self._jhat ** 3)

    def _D2(self, F):
        return sp.apply_multiplier(F, self._d2)

    def _D2inv(self, F):
        return sp.apply_multiplier(F, self._d2inv)

    # -- drift/diffusion splitting
    def b(self, X):
        self._check(X)
        u, eta = X.fields
        ux = derivative(u)
        q = 0.5 * dealiased_product(u, u) + dealiased_product(ux, ux) \
            + 0.5 * dealiased_product(eta, eta)
        G = derivative(self._D2inv(q))
        return ModelState("sch2", (-1.0 * G, -1.0 * dealiased_product(eta, ux)))

    def g_transport(self, X):
        self._check(X)
        u, eta = X.fields
        return ModelState("sch2", (
            -1.0 * dealiased_product(u, derivative(u)),
            -1.0 * dealiased_product(u, derivative(eta))))

    def ito_correction(self, X):
        self._check(X)
        u, eta = X.fields
        d2u = self._D2(u)
        acc_u = zero_field(self.grid)
        acc_e = zero_field(self.grid)
        for xi in self.basis.xis:
            acc_u = acc_u + lie_second(xi, d2u)
            acc_e = acc_e + lie_second(xi, eta)
        return ModelState("sch2", (0.5 * self._D2inv(acc_u), 0.5 * acc_e))

    def g(self, X):
        return self.g_transport(X) + self.ito_correction(X)

    def h_k(self, X, k):
        self._check(X)
        xi = self._xi(k)
        u, eta = X.fields
        return ModelState("sch2", (
            -1.0 * self._D2inv(lie_derivative(xi, self._D2(u))),
            -1.0 * lie_derivative(xi, eta)))

    # -- mollified family
    def g_eps_transport(self, X):
        self._check(X)
        ju = self._J(X.u)
        jeta = self._J(X.eta)
        return ModelState("sch2", (
            -1.0 * self._J(dealiased_product(ju, derivative(ju))),
            -1.0 * self._J(dealiased_product(ju, derivative(jeta)))))

    def ito_correction_eps(self, X):
        self._check(X)
        d2ju = self._D2(self._J(X.u))
        jeta = self._J(X.eta)
        acc_u = zero_field(self.grid)
        acc_e = zero_field(self.grid)
        for xi in self.basis.xis:
            acc_u = acc_u + lie_second(xi, d2ju)
            acc_e = acc_e + lie_second(xi, jeta)
        return ModelState("sch2", (0.5 * self._J3(self._D2inv(acc_u)),
                                   0.5 * self._J3(acc_e)))

    def g_eps(self, X):
        return self.g_eps_transport(X) + self.ito_correction_eps(X)

    def h_eps_k(self, X, k):
        self._check(X)
        xi = self._xi(k)
        return ModelState("sch2", (
            -1.0 * self._J(self._D2inv(lie_derivative(xi, self._D2(self._J(X.u))))),
            -1.0 * self._J(lie_derivative(xi, self._J(X.eta)))))

    # -- norms
    def x_inner(self, A, B):
        return hs_inner(A.u, B.u, self.s) + hs_inner(A.eta, B.eta, self.s - 1.0)

    def z_inner(self, A, B):
        return hs_inner(A.u, B.u, self.s - 2.0) + hs_inner(A.eta, B.eta, self.s - 3.0)

    def x_norm(self, X):
        return float(np.sqrt(max(self.x_inner(X, X), 0.0)))

    def z_norm(self, X):
        return float(np.sqrt(max(self.z_inner(X, X), 0.0)))

    def v_norm(self, X):
        # W^{1,inf} x W^{1,inf} blow-up functional, grid surrogate
        return lipschitz_norm(X.u) + lipschitz_norm(X.eta)

    def energy(self, X):
        """Conserved H^1-type energy of the deterministic system."""
        return sobolev_norm(X.u, 1.0) ** 2 + sobolev_norm(X.eta, 0.0) ** 2

    def max_velocity(self, X):
        return sup_norm(X.u)

    def _xi(self, k):
        if not 0 <= k < self.basis.K:
            raise ValueError("noise index %d out of range (K=%d)" % (k, self.basis.K))
        return self.basis.xis[k]

    def _check(self, X):
        if X.kind != "sch2":
            raise _wrong_variant("sch2", X.kind)


class CcfOps:
    """Nonlocal transport splitting: b = 0, g = -(H theta) theta_x + noise."""

    kind = "ccf"

    def __init__(self, grid, s, basis, eps):
        if grid.dim != 1:
            raise ValueError("ccf lives on the 1D torus")
        self.grid = grid
        self.s = float(s)
        self.basis = basis
        self.eps = float(eps)
        self._jhat = mollifier_symbol(grid, self.eps)

    def _J(self, F):
        return sp.apply_multiplier(F, self._jhat)

    def _J3(self, F):
        return sp.apply_multiplier(F, self._jhat ** 3)

    def b(self, X):
        self._check(X)
        return ModelState("ccf", (zero_field(self.grid),))

    def g_transport(self, X):
        self._check(X)
        th = X.theta
        return ModelState("ccf", (
            -1.0 * dealiased_product(hilbert_transform(th), derivative(th)),))

    def ito_correction(self, X):
        self._check(X)
        acc = zero_field(self.grid)
        for xi in self.basis.xis:
            acc = acc + lie_second(xi, X.theta)
        return ModelState("ccf", (0.5 * acc,))

    def g(self, X):
        return self.g_transport(X) + self.ito_correction(X)

    def h_k(self, X, k):
        self._check(X)
        return ModelState("ccf", (-1.0 * lie_derivative(self._xi(k), X.theta),))

    def g_eps_transport(self, X):
        self._check(X)
        jth = self._J(X.theta)
        return ModelState("ccf", (
            -1.0 * self._J(dealiased_product(hilbert_transform(jth),
                                             derivative(jth))),))

    def ito_correction_eps(self, X):
        self._check(X)
        jth = self._J(X.theta)
        acc = zero_field(self.grid)
        for xi in self.basis.xis:
            acc = acc + lie_second(xi, jth)
        return ModelState("ccf", (0.5 * self._J3(acc),))

    def g_eps(self, X):
        return self.g_eps_transport(X) + self.ito_correction_eps(X)

    def h_eps_k(self, X, k):
        self._check(X)
        return ModelState("ccf", (
            -1.0 * self._J(lie_derivative(self._xi(k), self._J(X.theta))),))

    def x_inner(self, A, B):
        return hs_inner(A.theta, B.theta, self.s)

    def z_inner(self, A, B):
        return hs_inner(A.theta, B.theta, self.s - 2.0)

    def x_norm(self, X):
        return sobolev_norm(X.theta, self.s)

    def z_norm(self, X):
        return sobolev_norm(X.theta, self.s - 2.0)

    def v_norm(self, X):
        # blow-up functional sup|theta_x| + sup|H theta_x|
        tx = derivative(X.theta)
        return sup_norm(tx) + sup_norm(hilbert_transform(tx))

    def max_velocity(self, X):
        return sup_norm(hilbert_transform(X.theta))

    def _xi(self, k):
        if not 0 <= k < self.basis.K:
            raise ValueError("noise index %d out of range (K=%d)" % (k, self.basis.K))
        return self.basis.xis[k]

    def _check(self, X):
        if X.kind != "ccf":
            raise _wrong_variant("ccf", X.kind)


class SqgOps:
    """SALT SQG splitting on the 2D torus, mean-zero theta, u = R-perp(theta).

    Norms are homogeneous (Lambda^s based), which is where the model's
    solution space lives.
    """

    kind = "sqg"

    def __init__(self, grid, s, basis, eps):
        if grid.dim != 2:
            raise ValueError("sqg lives on the 2D torus")
        self.grid = grid
        self.s = float(s)
        self.basis = basis
        self.eps = float(eps)
        self._jhat = mollifier_symbol(grid, self.eps)
        for xi in basis.xis:
            if xi.max_divergence > 1e-12:
                raise ValueError("sqg needs a divergence-free noise basis")

    def _J(self, F):
        return sp.apply_multiplier(F, self._jhat)

    def _J3(self, F):
        return sp.apply_multiplier(F, self._jhat ** 3)

    def b(self, X):
        self._check(X)
        return ModelState("sqg", (zero_field(self.grid),))

    def _advection(self, th):
        u1, u2 = riesz_perp(th)
        return dealiased_product(u1, derivative(th, 0)) \
            + dealiased_product(u2, derivative(th, 1))

    def g_transport(self, X):
        self._check(X)
        return ModelState("sqg", (-1.0 * self._advection(X.theta),))

    def ito_correction(self, X):
        self._check(X)
        acc = zero_field(self.grid)
        for xi in self.basis.xis:
            acc = acc + lie_second(xi, X.theta)
        return ModelState("sqg", (0.5 * acc,))

    def g(self, X):
        return self.g_transport(X) + self.ito_correction(X)

    def h_k(self, X, k):
        self._check(X)
        return ModelState("sqg", (-1.0 * lie_derivative(self._xi(k), X.theta),))

    def g_eps_transport(self, X):
        self._check(X)
        jth = self._J(X.theta)
        return ModelState("sqg", (-1.0 * self._J(self._advection(jth)),))

    def ito_correction_eps(self, X):
        self._check(X)
        jth = self._J(X.theta)
        acc = zero_field(self.grid)
        for xi in self.basis.xis:
            acc = acc + lie_second(xi, jth)
        return ModelState("sqg", (0.5 * self._J3(acc),))

    def g_eps(self, X):
        return self.g_eps_transport(X) + self.ito_correction_eps(X)

    def h_eps_k(self, X, k):
        self._check(X)
        return ModelState("sqg", (
            -1.0 * self._J(lie_derivative(self._xi(k), self._J(X.theta))),))

    def x_inner(self, A, B):
        return homogeneous_inner(A.theta, B.theta, self.s)

    def z_inner(self, A, B):
        return homogeneous_inner(A.theta, B.theta, self.s - 2.0)

    def x_norm(self, X):
        return homogeneous_norm(X.theta, self.s)

    def z_norm(self, X):
        return homogeneous_norm(X.theta, self.s - 2.0)

    def v_norm(self, X):
        # sup|grad theta| + sup|R grad theta| on the grid nodes
        g1, g2 = gradient(X.theta)
        v1, v2 = to_grid(g1).values, to_grid(g2).values
        out = float(np.max(np.sqrt(v1 * v1 + v2 * v2)))
        acc = np.zeros(self.grid.shape)
        for gj in (g1, g2):
            for axis in (0, 1):
                r = to_grid(riesz_component(gj, axis)).values
                acc += r * r
        return out + float(np.max(np.sqrt(acc)))

    def l2_norm(self, X):
        return sobolev_norm(X.theta, 0.0)

    def max_velocity(self, X):
        u1, u2 = riesz_perp(X.theta)
        v1, v2 = to_grid(u1).values, to_grid(u2).values
        return float(np.max(np.sqrt(v1 * v1 + v2 * v2)))

    def _xi(self, k):
        if not 0 <= k < self.basis.K:
            raise ValueError("noise index %d out of range (K=%d)" % (k, self.basis.K))
        return self.basis.xis[k]

    def _check(self, X):
        if X.kind != "sqg":
            raise _wrong_variant("sqg", X.kind)


class LinearOps:
    """Scalar test SDE dX = a X o dW, i.e. dX = a^2 X/2 dt + a X dW in Ito
    form, represented as a constant field so the steppers apply unchanged.
    The exact solution X_0 exp(a W_t) pins down strong convergence orders.
    """

    kind = "linear"

    def __init__(self, grid, a):
        self.grid = grid
        self.a = float(a)
        self.s = 0.0
        self.eps = 0.5

    def b(self, X):
        self._check(X)
        return ModelState("linear", (zero_field(self.grid),))

    def g_transport(self, X):
        self._check(X)
        return ModelState("linear", (zero_field(self.grid),))

    def ito_correction(self, X):
        self._check(X)
        return ModelState("linear", (0.5 * self.a * self.a * X.theta,))

    def g(self, X):
        return self.ito_correction(X)

    def h_k(self, X, k):
        self._check(X)
        return ModelState("linear", (self.a * X.theta,))

    g_eps_transport = g_transport
    ito_correction_eps = ito_correction
    g_eps = g
    h_eps_k = h_k

    def value(self, X):
        return X.theta.mean()

    def x_inner(self, A, B):
        return hs_inner(A.theta, B.theta, 0.0)

    z_inner = x_inner

    def x_norm(self, X):
        return sobolev_norm(X.theta, 0.0)

    z_norm = x_norm
    v_norm = x_norm

    def max_velocity(self, X):
        return 0.0

    def exact_solution(self, x0, w_t):
        return x0 * np.exp(self.a * w_t)

    def _check(self, X):
        if X.kind != "linear":
            raise _wrong_variant("linear", X.kind)


def make_ops(model, grid, s, basis, eps, linear_a=1.0):
    if model == "sch2":
        return Sch2Ops(grid, s, basis, eps)
    if model == "ccf":
        return CcfOps(grid, s, basis, eps)
    if model == "sqg":
        return SqgOps(grid, s, basis, eps)
    if model == "linear":
        return LinearOps(grid, linear_a)
    raise ValueError("unknown model %r" % (model,))


def smooth_initial_state(model, grid, amplitude):
    """Default deterministic smooth initial data per model."""
    a = float(amplitude)
    if model == "sch2":
        u = sp.from_values(grid, a * np.cos(grid.x))
        eta = sp.from_values(grid, a * np.sin(grid.x))
        return ModelState("sch2", (u, eta))
    if model == "ccf":
        return ModelState("ccf", (sp.from_values(grid, a * np.cos(grid.x)),))
    if model == "sqg":
        x1, x2 = grid.nodes()
        vals = a * (np.cos(x1) + np.sin(x2) + 0.5 * np.cos(x1 + x2))
        return ModelState("sqg", (sp.from_values(grid, vals),))
    if model == "linear":
        th = zero_field(grid)
        th.coeffs[(0,) * grid.dim] = a
        return ModelState("linear", (th,))
    raise ValueError("unknown model %r" % (model,))


def random_initial_state(model, grid, amplitude, seed, kmax=4):
    """Seeded random trigonometric initial data with mild coefficient decay."""
    rng = np.random.default_rng(seed)

    def scalar(zero_mean):
        c = np.zeros(grid.shape, dtype=np.complex128)
        if grid.dim == 1:
            for k in range(1 if zero_mean else 0, kmax + 1):
                amp = rng.standard_normal() + 1j * rng.standard_normal()
                c[k] = amp / (1.0 + k * k)
        else:
            for k1 in range(-kmax, kmax + 1):
                for k2 in range(0, kmax + 1):
                    if k2 == 0 and k1 <= 0:
                        continue
                    amp = rng.standard_normal() + 1j * rng.standard_normal()
                    c[k1, k2] = amp / (1.0 + k1 * k1 + k2 * k2)
        # taking the real part of the inverse transform symmetrises c
        vals = to_grid(SpectralField(grid, c)).values
        peak = max(float(np.max(np.abs(vals))), 1e-30)
        return sp.from_values(grid, float(amplitude) * vals / peak)

    if model == "sch2":
        return ModelState("sch2", (scalar(False), scalar(False)))
    if model == "ccf":
        return ModelState("ccf", (scalar(False),))
    if model == "sqg":
        return ModelState("sqg", (scalar(True),))
    if model == "linear":
        return smooth_initial_state("linear", grid, amplitude)
    raise ValueError("unknown model %r" % (model,))


def zero_initial_state(model, grid):
    n_fields = len(FIELD_NAMES[model])
    return ModelState(model, tuple(zero_field(grid) for _ in range(n_fields)))


def make_initial_state(model, grid, ic, amplitude, seed=0):
    if ic == "smooth":
        return smooth_initial_state(model, grid, amplitude)
    if ic == "random":
        return random_initial_state(model, grid, amplitude, seed)
    if ic == "zero":
        return zero_initial_state(model, grid)
    raise ValueError("unknown initial condition %r (smooth | random | zero)" % (ic,))
