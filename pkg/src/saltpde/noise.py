"""Noise basis construction and reproducible Brownian driving paths.

The correlation fields xi_k are trigonometric modes scaled so that
||xi_k||_{H^{s_max}} follows a prescribed decay law (geometric by default,
ratio 1/2, which makes every partial-sum and tail check an exact geometric
series).  The 2D builder derives the xi_k from stream functions via the
perpendicular gradient, so they are divergence-free by construction.

Brownian increments are generated by deterministic midpoint refinement of
a coarse path anchored at a scale fixed by the binary mantissa of dt.  Two
calls with the same seed and step sizes dt and dt/2 therefore agree: the
finer increments sum pairwise to the coarser ones.  That is what makes
one stored path usable across a whole dt-refinement ladder.
"""

import math

import numpy as np

from .spectral import GridField, derivative, from_values
from .lie import VectorFieldXi


class NoiseBasis:
    """Ordered family {xi_k}, k = 1..K, plus its decay metadata."""

    def __init__(self, xis, decay_kind, decay_param, s_max, target_norms):
        self.xis = list(xis)
        self.K = len(self.xis)
        self.decay_kind = decay_kind
        self.decay_param = float(decay_param)
        self.s_max = float(s_max)
        self.target_norms = list(target_norms)

    def partial_sum(self, s):
        return float(sum(xi.sobolev_norm(s) for xi in self.xis))

    def tail_bound(self, s):
        """Closed-form bound on sum_{k > K} ||xi_k||_{H^s} for s <= s_max."""
        if s > self.s_max:
            raise ValueError("tail bound only available for s <= s_max")
        if self.decay_kind == "geometric":
            r = self.decay_param
            return r ** (self.K + 1) / (1.0 - r)
        # polynomial targets k^(-p): integral bound
        p = self.decay_param
        return self.K ** (1.0 - p) / (p - 1.0)


def _check_decay(decay_kind, decay_param):
    if decay_kind == "geometric":
        if not 0.0 < decay_param < 1.0:
            raise ValueError("geometric decay needs ratio in (0,1), got %r"
                             % (decay_param,))
    elif decay_kind == "polynomial":
        if decay_param <= 1.0:
            # sum k^(-p) diverges: report the failed tail bound
            raise ValueError(
                "polynomial decay p=%r gives a divergent H^{s_max} tail "
                "(sum k^-p needs p > 1)" % (decay_param,))
    else:
        raise ValueError("unknown decay kind %r" % (decay_kind,))


def _targets(K, decay_kind, decay_param):
    if decay_kind == "geometric":
        return [decay_param ** k for k in range(1, K + 1)]
    return [float(k) ** (-decay_param) for k in range(1, K + 1)]


def build_basis_1d(grid, K, s_max, decay_kind="geometric", decay_param=0.5):
    """1D basis xi_k = a_k * trig(k x) with ||xi_k||_{H^{s_max}} on target."""
    if K < 0:
        raise ValueError("K must be >= 0")
    _check_decay(decay_kind, decay_param)
    targets = _targets(K, decay_kind, decay_param)
    xis = []
    x = grid.x
    for k in range(1, K + 1):
        # ||a trig(k x)||_{H^s} = |a| (1+k^2)^(s/2) / sqrt(2)
        a = targets[k - 1] * math.sqrt(2.0) / (1.0 + k * k) ** (s_max / 2.0)
        wave = np.cos(k * x) if k % 2 == 1 else np.sin(k * x)
        xis.append(VectorFieldXi([GridField(grid, a * wave)]))
    return NoiseBasis(xis, decay_kind, decay_param, s_max, targets)


_SQG_WAVES = [(1, 0), (0, 1), (1, 1), (1, -1)]


def build_basis_sqg(grid, K, s_max, decay_kind="geometric", decay_param=0.5):
    """2D divergence-free basis xi_k = perp-grad of a stream function."""
    if grid.dim != 2:
        raise ValueError("SQG basis needs a 2D grid")
    if K < 0:
        raise ValueError("K must be >= 0")
    _check_decay(decay_kind, decay_param)
    targets = _targets(K, decay_kind, decay_param)
    x1, x2 = grid.nodes()
    xis = []
    for k in range(1, K + 1):
        m1, m2 = _SQG_WAVES[(k - 1) % len(_SQG_WAVES)]
        scale = 1 + (k - 1) // len(_SQG_WAVES)
        m1, m2 = scale * m1, scale * m2
        phase = m1 * x1 + m2 * x2
        wave = np.cos(phase) if k % 2 == 1 else np.sin(phase)
        psi = from_values(grid, wave)
        comp1 = -1.0 * derivative(psi, 1)   # xi = (-d2 psi, d1 psi)
        comp2 = derivative(psi, 0)
        xi = VectorFieldXi([comp1, comp2], require_divergence_free=True)
        a = targets[k - 1] / xi.sobolev_norm(s_max)
        xi = VectorFieldXi([a * comp1, a * comp2], require_divergence_free=True)
        xis.append(xi)
    return NoiseBasis(xis, decay_kind, decay_param, s_max, targets)


def constant_basis_1d(grid, c, s_max=6.0):
    """Single constant field xi = c; the exact-cancellation special case."""
    xi = VectorFieldXi([GridField(grid, np.full(grid.shape, float(c)))])
    return NoiseBasis([xi], "geometric", 0.5, s_max, [xi.sobolev_norm(s_max)])


# ---------------------------------------------------------------------------
# Brownian paths

class BrownianPath:
    """Increments of K independent Brownian motions on a fixed step grid."""

    def __init__(self, seed, dt, n_steps, K, increments):
        increments = np.asarray(increments, dtype=np.float64)
        if increments.shape != (n_steps, K):
            raise ValueError("increments must have shape (n_steps, K)")
        self.seed = int(seed)
        self.dt = float(dt)
        self.n_steps = int(n_steps)
        self.K = int(K)
        self.increments = increments

    def coarsen(self, factor=2):
        """Pairwise-summed path at step factor*dt (n_steps must divide)."""
        if self.n_steps % factor:
            raise ValueError("n_steps not divisible by %d" % factor)
        inc = self.increments.reshape(self.n_steps // factor, factor, self.K)
        return BrownianPath(self.seed, self.dt * factor, self.n_steps // factor,
                            self.K, inc.sum(axis=1))

    def endpoint(self):
        """W(T) per noise component."""
        return self.increments.sum(axis=0)


# root scale of the refinement tree: intervals of length m * 2**_E_ROOT
# where m is the odd mantissa of dt.  Any dt = m * 2**e with e <= _E_ROOT
# sits depth _E_ROOT - e below the root.
_E_ROOT = 10


def _odd_mantissa(dt):
    # dt = m * 2**e exactly, with m an odd integer
    fr, ex = math.frexp(dt)
    m = int(fr * (1 << 53))
    e = ex - 53
    tz = (m & -m).bit_length() - 1
    return m >> tz, e + tz


def _level_normals(seed, k, level, count):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(k, level))
    return np.random.Generator(np.random.Philox(ss)).standard_normal(count)


def sample_path(seed, dt, n_steps, K):
    """Deterministic N(0, dt) increments, consistent under dt halving.

    For fixed seed, the path at dt/2 sums pairwise to the path at dt
    (up to round-off), because both are read off the same midpoint
    refinement tree.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_steps < 0 or K < 0:
        raise ValueError("n_steps and K must be >= 0")
    if n_steps == 0 or K == 0:
        return BrownianPath(seed, dt, n_steps, K,
                            np.zeros((n_steps, K)))
    m, e = _odd_mantissa(dt)
    depth = _E_ROOT - e
    if depth < 0:
        raise ValueError("dt too large for the refinement tree (dt <= %g needed)"
                         % (m * 2.0 ** _E_ROOT,))
    sizes = [n_steps]
    for _ in range(depth):
        sizes.append((sizes[-1] + 1) // 2)
    sizes.reverse()                       # sizes[level], level 0 = root

    inc = np.empty((n_steps, K))
    root_std = math.sqrt(m) * 2.0 ** (_E_ROOT / 2.0)
    for k in range(K):
        vals = _level_normals(seed, k, 0, sizes[0]) * root_std
        for level in range(1, depth + 1):
            child_len = m * 2.0 ** (_E_ROOT - level)
            w = _level_normals(seed, k, level, len(vals)) \
                * math.sqrt(child_len / 2.0)
            children = np.empty(2 * len(vals))
            children[0::2] = 0.5 * vals + w
            children[1::2] = 0.5 * vals - w
            vals = children[:sizes[level]]
        inc[:, k] = vals
    return BrownianPath(seed, dt, n_steps, K, inc)


def write_path_csv(path, filename):
    with open(filename, "w") as fh:
        fh.write("# seed = %d\n# dt = %s\n# n_steps = %d\n# K = %d\n"
                 % (path.seed, repr(path.dt), path.n_steps, path.K))
        for row in path.increments:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_path_csv(filename):
    meta = {}
    rows = []
    with open(filename) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
                continue
            rows.append([float(tok) for tok in line.split()])
    inc = np.array(rows) if rows else np.zeros((0, int(meta["K"])))
    if inc.ndim == 1:
        inc = inc.reshape(0, int(meta["K"]))
    return BrownianPath(int(meta["seed"]), float(meta["dt"]),
                        int(meta["n_steps"]), int(meta["K"]), inc)


def write_path_npy(path, filename):
    np.save(filename, path.increments)


def read_path_npy(filename, seed, dt, K):
    inc = np.load(filename)
    return BrownianPath(seed, dt, inc.shape[0], K, inc)
