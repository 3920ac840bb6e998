"""Infinite-width tangent kernels for the supported architectures.

`ntk_analytic` evaluates closed-form recursions; `ntk_empirical` estimates
the same kernel by Monte Carlo over finite-width initializations with
hand-written reverse-mode gradients, and is the ground truth the analytic
recursions are validated against.

Conventions shared by both paths: weights are drawn N(0, 1) and every
matrix product carries an explicit 1/sqrt(fan-in) factor; "relu" means the
variance-preserving rectifier sqrt(2)*max(z, 0), so second moments
propagate without decay; no bias terms anywhere; the network output is a
single linear unit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

from .errors import ResourceError, SingularPropagationError
from .graph import ConvolutionMatrix, Graph, make_rng

KINDS = ("mlp", "gcn", "sgc", "ppnp", "appnp", "skip_pc", "skip_alpha", "linear")
GRAPH_KINDS = ("gcn", "sgc", "ppnp", "appnp", "skip_pc", "skip_alpha")

#: Refuse empirical estimation when n * width exceeds this (the per-node
#: gradient contraction holds n^2 * width floats).
DEFAULT_WIDTH_CAP = 1 << 19

_KERNEL_MAGIC = b"CLABKRN1"


@dataclass(frozen=True)
class ArchitectureSpec:
    """Which network to take the tangent kernel of.

    `depth` counts hidden layers; the linear output map (which for the
    convolutional kinds includes one further propagation by S) comes on
    top. `depth=0` is permitted for the MLP only and means the bare
    linear readout, whose empirical kernel is deterministic.
    """

    kind: str
    depth: int = 1
    conv: ConvolutionMatrix | None = None
    alpha: float | None = None
    power_k: int | None = None
    skip_activation: str = "relu"
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown architecture kind {self.kind!r}")
        if self.kind == "linear":
            return
        min_depth = 0 if self.kind == "mlp" else 1
        if self.depth < min_depth:
            raise ValueError(f"{self.kind} needs depth >= {min_depth}")
        if self.kind in GRAPH_KINDS and self.conv is None:
            raise ValueError(f"{self.kind} requires a convolution matrix")
        if self.kind in ("mlp", "linear") and self.conv is not None:
            raise ValueError(f"{self.kind} takes no convolution matrix")
        if self.kind in ("ppnp", "appnp", "skip_alpha"):
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise ValueError(f"{self.kind} requires alpha in [0, 1]")
        if self.kind == "appnp" and (self.power_k is None or self.power_k < 1):
            raise ValueError("appnp requires power_k >= 1")
        if self.skip_activation not in ("linear", "relu"):
            raise ValueError("skip_activation must be 'linear' or 'relu'")
        if self.activation not in ("linear", "relu"):
            raise ValueError("activation must be 'linear' or 'relu'")

    def describe(self) -> str:
        bits = [self.kind]
        if self.kind != "linear":
            bits.append(f"L={self.depth}")
            if self.kind in ("mlp", "gcn"):
                bits.append(f"act={self.activation}")
            if self.conv is not None:
                bits.append(f"conv={self.conv.mode}")
            if self.alpha is not None:
                bits.append(f"alpha={self.alpha}")
            if self.power_k is not None:
                bits.append(f"K={self.power_k}")
            if self.kind in ("skip_pc", "skip_alpha"):
                bits.append(f"skip={self.skip_activation}")
        return "/".join(bits)


@dataclass(frozen=True)
class KernelMatrix:
    """A symmetric PSD kernel over the graph nodes."""

    Q: np.ndarray
    source: str

    def __post_init__(self):
        q = np.ascontiguousarray(np.asarray(self.Q, dtype=np.float64))
        scale = float(np.abs(q).max(initial=0.0))
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("kernel must be square")
        if not np.all(np.isfinite(q)):
            raise ValueError("kernel contains non-finite entries")
        asym = float(np.abs(q - q.T).max(initial=0.0))
        if scale > 0 and asym > 1e-9 * scale:
            raise ValueError(f"kernel asymmetry {asym:.3e} exceeds 1e-9 relative")
        q = (q + q.T) / 2.0
        eigs = np.linalg.eigvalsh(q)
        norm = float(np.abs(eigs).max(initial=0.0))
        if eigs.min(initial=0.0) < -1e-8 * max(norm, 1e-300):
            raise ValueError(
                f"kernel is not PSD: smallest eigenvalue {eigs.min():.3e} "
                f"against norm {norm:.3e}"
            )
        object.__setattr__(self, "Q", q)
        q.setflags(write=False)

    @property
    def n(self) -> int:
        return self.Q.shape[0]


def kernel_submatrix(kernel: KernelMatrix | np.ndarray, rows, cols) -> np.ndarray:
    """Dense copy of the Q[rows, cols] block."""
    q = kernel.Q if isinstance(kernel, KernelMatrix) else np.asarray(kernel)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    n = q.shape[0]
    for idx in (rows, cols):
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise IndexError(f"kernel index out of range for n={n}")
    return q[np.ix_(rows, cols)].copy()


# ---------------------------------------------------------------------------
# Gaussian moment maps for the variance-preserving rectifier
# ---------------------------------------------------------------------------

def kappa0(rho: np.ndarray) -> np.ndarray:
    return (pi - np.arccos(rho)) / pi


def kappa1(rho: np.ndarray) -> np.ndarray:
    return (np.sqrt(np.maximum(1.0 - rho * rho, 0.0)) + rho * (pi - np.arccos(rho))) / pi


def _corr(sigma: np.ndarray):
    var = np.maximum(np.diag(sigma), 0.0)
    denom = np.sqrt(np.outer(var, var))
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0.0, sigma / np.where(denom > 0.0, denom, 1.0), 0.0)
    return np.clip(rho, -1.0, 1.0), denom


def _pair_moment(act_r: str, act_s: str, sigma: np.ndarray) -> np.ndarray:
    """E[f(u_r) g(u_s)] for centered Gaussians with second moments `sigma`."""
    if act_r == "linear" and act_s == "linear":
        return sigma.copy()
    if act_r == "linear" or act_s == "linear":
        return sigma / sqrt(2.0)
    rho, denom = _corr(sigma)
    return denom * kappa1(rho)


def _deriv_moment(act: str, sigma: np.ndarray) -> np.ndarray:
    """E[f'(u_r) f'(u_s)]; for the rectifier this is the arc-cosine step kernel."""
    if act == "linear":
        return np.ones_like(sigma)
    rho, denom = _corr(sigma)
    out = kappa0(rho)
    return np.where(denom > 0.0, out, 0.0)


def _mean_vec(act: str, sigma: np.ndarray) -> np.ndarray:
    if act == "linear":
        return np.zeros(sigma.shape[0])
    return np.sqrt(np.maximum(np.diag(sigma), 0.0) / pi)


def _activate(act: str, z: np.ndarray) -> np.ndarray:
    if act == "linear":
        return z
    return sqrt(2.0) * np.maximum(z, 0.0)


def _activate_deriv(act: str, z: np.ndarray) -> np.ndarray:
    if act == "linear":
        return np.ones_like(z)
    return sqrt(2.0) * (z > 0.0)


# ---------------------------------------------------------------------------
# Analytic kernels
# ---------------------------------------------------------------------------

def _mlp_theta(x: np.ndarray, depth: int, act: str) -> np.ndarray:
    sig = x @ x.T / x.shape[1]
    theta = sig.copy()
    for _ in range(depth):
        e = _pair_moment(act, act, sig)
        theta = theta * _deriv_moment(act, sig) + e
        sig = e
    return theta


def _gcn_theta(x: np.ndarray, s: np.ndarray, depth: int, act: str) -> np.ndarray:
    sig = s @ (x @ x.T / x.shape[1]) @ s.T
    theta = sig.copy()
    for _ in range(depth):
        e = _pair_moment(act, act, sig)
        theta = s @ (theta * _deriv_moment(act, sig) + e) @ s.T
        sig = s @ e @ s.T
    return theta


def _sgc_theta(x: np.ndarray, s: np.ndarray, depth: int) -> np.ndarray:
    # Fully linear network: the kernel collapses to (L+1) * M M^T / d
    # with M = S^(L+1) X.
    m = x
    for _ in range(depth + 1):
        m = s @ m
    return (depth + 1) * (m @ m.T) / x.shape[1]


def _propagation_matrix(spec: ArchitectureSpec, n: int) -> np.ndarray:
    s = spec.conv.S
    if spec.kind == "ppnp":
        a = np.eye(n) - (1.0 - spec.alpha) * s
        if np.linalg.cond(a) > 1e12:
            raise SingularPropagationError(
                "propagation matrix I - (1-alpha) S is singular; "
                "alpha=0 with a stochastic S has no inverse"
            )
        return spec.alpha * np.linalg.solve(a, np.eye(n))
    p = spec.alpha * np.eye(n)
    pw = np.eye(n)
    for _ in range(spec.power_k - 1):
        pw = (1.0 - spec.alpha) * (pw @ s)
        p = p + spec.alpha * pw
    p = p + (1.0 - spec.alpha) * (pw @ s)
    return p


def _skip_pc_theta(x: np.ndarray, s: np.ndarray, depth: int, sact: str) -> np.ndarray:
    sig0 = x @ x.T  # random-projection features: second moment X X^T, no 1/d
    mean_skip = _mean_vec(sact, sig0)
    e_skip = _pair_moment(sact, sact, sig0)
    # First hidden layer sees sigma(H0) + sigma_s(H0) on the *same* variable.
    a = (_pair_moment("relu", "relu", sig0)
         + _pair_moment("relu", sact, sig0)
         + _pair_moment(sact, "relu", sig0)
         + e_skip)
    sig = s @ a @ s.T
    theta = sig.copy()
    for _ in range(depth - 1):
        mean_hidden = _mean_vec("relu", sig)
        cross = np.outer(mean_hidden, mean_skip)
        a = _pair_moment("relu", "relu", sig) + cross + cross.T + e_skip
        theta = s @ (theta * _deriv_moment("relu", sig) + a) @ s.T
        sig = s @ a @ s.T
    e = _pair_moment("relu", "relu", sig)
    return s @ (theta * _deriv_moment("relu", sig) + e) @ s.T


def _skip_alpha_theta(x: np.ndarray, s: np.ndarray, depth: int, sact: str,
                      alpha: float) -> np.ndarray:
    sig0 = x @ x.T
    e_skip = _pair_moment(sact, sact, sig0)
    cross = _pair_moment("linear", sact, sig0)  # E[u_r sigma_s(u_s)]
    a = ((1.0 - alpha) ** 2 * (s @ sig0 @ s.T)
         + alpha ** 2 * e_skip
         + alpha * (1.0 - alpha) * (s @ cross + cross @ s.T))
    sig = a
    theta = a.copy()
    for _ in range(depth - 1):
        a = (1.0 - alpha) ** 2 * (s @ sig @ s.T) + alpha ** 2 * e_skip
        theta = (1.0 - alpha) ** 2 * (s @ theta @ s.T) + a
        sig = a
    return s @ (theta + sig) @ s.T


def ntk_analytic(spec: ArchitectureSpec, graph: Graph) -> KernelMatrix:
    """Infinite-width tangent kernel of the architecture on this graph."""
    x = graph.features
    if spec.conv is not None and spec.conv.S.shape != (graph.n, graph.n):
        raise ValueError("convolution matrix does not match the graph size")
    if spec.kind == "linear":
        return KernelMatrix(x @ x.T, "linear")
    if spec.kind == "mlp":
        theta = _mlp_theta(x, spec.depth, spec.activation)
    elif spec.kind == "gcn":
        theta = _gcn_theta(x, spec.conv.S, spec.depth, spec.activation)
    elif spec.kind == "sgc":
        theta = _sgc_theta(x, spec.conv.S, spec.depth)
    elif spec.kind in ("ppnp", "appnp"):
        p = _propagation_matrix(spec, graph.n)
        theta = p @ _mlp_theta(x, spec.depth, spec.activation) @ p.T
    elif spec.kind == "skip_pc":
        theta = _skip_pc_theta(x, spec.conv.S, spec.depth, spec.skip_activation)
    else:
        theta = _skip_alpha_theta(x, spec.conv.S, spec.depth, spec.skip_activation,
                                  spec.alpha)
    # the recursions are symmetric in exact arithmetic; remove float residue
    theta = (theta + theta.T) / 2.0
    return KernelMatrix(theta, spec.describe())


# ---------------------------------------------------------------------------
# Empirical kernels (Monte Carlo over finite-width initializations)
# ---------------------------------------------------------------------------

def _contract(d: np.ndarray, a: np.ndarray, fan: int) -> np.ndarray:
    """sum_l <grad_i W_l, grad_j W_l> for one layer, without materializing
    the per-parameter Jacobian: contracts through G = A A^T / fan."""
    g = a @ a.T / fan
    return np.einsum("irk,rs,jsk->ij", d, g, d, optimize=True)


def _pull_back(d: np.ndarray, w: np.ndarray, fan: int, s: np.ndarray | None) -> np.ndarray:
    """Gradient w.r.t. the previous layer's output: (S^T d) W^T / sqrt(fan)."""
    if s is not None:
        d = np.einsum("pr,ipk->irk", s, d, optimize=True)
    return np.matmul(d, w.T) / sqrt(fan)


def _stack_sample(rng, x, s, depth, width, act, out_seed=None):
    """One draw of a (graph-)convolutional stack; returns its NTK contribution.

    The stack is P_1 = (S X) W_1 / sqrt(d), P_(l+1) = (S act(P_l)) W_(l+1)
    / sqrt(width), output = last P. `s=None` drops the propagation (MLP);
    `out_seed` left-multiplies the output by a fixed matrix (PPNP/APPNP).
    """
    n, d = x.shape
    dims = [d] + [width] * depth + [1]
    weights = [rng.standard_normal((dims[i], dims[i + 1])) for i in range(depth + 1)]
    inputs, preacts = [], []
    a = x if s is None else s @ x
    for l in range(depth + 1):
        fan = dims[l]
        inputs.append((a, fan))
        p = a @ weights[l] / sqrt(fan)
        if l < depth:
            preacts.append(p)
            a = _activate(act, p) if s is None else s @ _activate(act, p)
    q = np.zeros((n, n))
    d_cur = np.eye(n)[:, :, None] if out_seed is None else out_seed[:, :, None]
    for l in range(depth, -1, -1):
        a_l, fan = inputs[l]
        q += _contract(d_cur, a_l, fan)
        if l > 0:
            d_cur = _pull_back(d_cur, weights[l], fan, s)
            d_cur = d_cur * _activate_deriv(act, preacts[l - 1])[None, :, :]
    return q


def _skip_pc_sample(rng, x, s, depth, width, sact):
    n = x.shape[0]
    h0 = x @ rng.standard_normal((x.shape[1], width))
    skip = _activate(sact, h0)
    weights = [rng.standard_normal((width, width)) for _ in range(depth)]
    weights.append(rng.standard_normal((width, 1)))
    inputs, preacts = [], []
    carried = _activate("relu", h0)
    for l in range(depth):
        a = s @ (carried + skip)
        inputs.append(a)
        p = a @ weights[l] / sqrt(width)
        preacts.append(p)
        carried = _activate("relu", p)
    inputs.append(s @ carried)
    q = np.zeros((n, n))
    d_cur = np.eye(n)[:, :, None]
    for l in range(depth, -1, -1):
        q += _contract(d_cur, inputs[l], width)
        if l > 0:
            d_cur = _pull_back(d_cur, weights[l], width, s)
            d_cur = d_cur * _activate_deriv("relu", preacts[l - 1])[None, :, :]
    return q


def _skip_alpha_sample(rng, x, s, depth, width, sact, alpha):
    n = x.shape[0]
    h0 = x @ rng.standard_normal((x.shape[1], width))
    skip = alpha * _activate(sact, h0)
    weights = [rng.standard_normal((width, width)) for _ in range(depth)]
    weights.append(rng.standard_normal((width, 1)))
    inputs = []
    carried = h0
    for l in range(depth):
        a = (1.0 - alpha) * (s @ carried) + skip
        inputs.append(a)
        carried = a @ weights[l] / sqrt(width)
    inputs.append(s @ carried)
    q = np.zeros((n, n))
    d_cur = np.eye(n)[:, :, None]
    for l in range(depth, -1, -1):
        q += _contract(d_cur, inputs[l], width)
        if l > 0:
            d_cur = _pull_back(d_cur, weights[l], width, s)
            if l < depth:
                # hidden inputs carry the (1-alpha) interpolation weight
                d_cur = (1.0 - alpha) * d_cur
    return q


def ntk_empirical(spec: ArchitectureSpec, graph: Graph, width: int, samples: int,
                  seed: int = 0, width_cap: int = DEFAULT_WIDTH_CAP) -> KernelMatrix:
    """Monte-Carlo tangent kernel of a width-`width` instantiation.

    Averages <grad_theta f_i, grad_theta f_j> over `samples` fresh
    initializations. Gradients come from hand-written reverse mode; the
    Jacobian is contracted layer by layer, never stored whole.
    """
    if spec.kind == "linear":
        raise ValueError("the linear kernel has no width; use ntk_analytic")
    if width < 8:
        raise ValueError("width must be at least 8")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if graph.n * width > width_cap:
        raise ResourceError(
            f"n*width = {graph.n * width} exceeds the cap {width_cap}; "
            "raise width_cap explicitly if you have the memory"
        )
    rng = make_rng(seed)
    x = graph.features
    s = spec.conv.S if spec.conv is not None else None
    total = np.zeros((graph.n, graph.n))
    for _ in range(samples):
        if spec.kind in ("mlp", "gcn", "sgc"):
            act = "linear" if spec.kind == "sgc" else spec.activation
            total += _stack_sample(rng, x, s, spec.depth, width, act)
        elif spec.kind in ("ppnp", "appnp"):
            p = _propagation_matrix(spec, graph.n)
            total += _stack_sample(rng, x, None, spec.depth, width, spec.activation,
                                   out_seed=p)
        elif spec.kind == "skip_pc":
            total += _skip_pc_sample(rng, x, s, spec.depth, width, spec.skip_activation)
        else:
            total += _skip_alpha_sample(rng, x, s, spec.depth, width,
                                        spec.skip_activation, spec.alpha)
    return KernelMatrix(total / samples, f"empirical/{spec.describe()}/w={width}/s={samples}")


# ---------------------------------------------------------------------------
# Kernel file IO
# ---------------------------------------------------------------------------

def save_kernel(kernel: KernelMatrix, path) -> None:
    """Binary container: 8-byte magic, little-endian uint64 n, f64 row-major data."""
    with open(path, "wb") as fh:
        fh.write(_KERNEL_MAGIC)
        fh.write(struct.pack("<Q", kernel.n))
        fh.write(np.ascontiguousarray(kernel.Q, dtype="<f8").tobytes())


def load_kernel(path) -> KernelMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _KERNEL_MAGIC:
            raise ValueError(f"{path}: not a kernel file (bad magic {magic!r})")
        (n,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * n:
        raise ValueError(f"{path}: expected {n * n} values, found {data.size}")
    return KernelMatrix(data.reshape(n, n).astype(np.float64), "imported")


def kernel_to_csv(kernel: KernelMatrix, path) -> None:
    np.savetxt(path, kernel.Q, delimiter=",")


def kernel_from_csv(path) -> KernelMatrix:
    return KernelMatrix(np.loadtxt(path, delimiter=",", ndmin=2), "imported")
