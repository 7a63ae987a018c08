"""Deterministic test objectives with analytic gradients.

Four problems: a convex quadratic, the chained banana-valley benchmark, a
synthetic logistic regression, and a small dense network on a two-arm spiral.
Dataset problems are specified by generator algorithm plus seed (documented
in each constructor) so results are regenerable from config alone; minibatch
selection is a counter-based epoch shuffle keyed by (dataset key, epoch),
with the batch counter supplied by the caller as batch_seed.

Every problem is pure: the same (params, batch_seed) always yields the same
loss and gradient, so evaluation is safe under concurrency and under the
finite-difference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericError
from .rng import derive_key, normals, permutation, uniforms
from .vectors import GradVector, Manifest, ParamVector

_MAX_MLP_PARAMS = 50_000


@dataclass(frozen=True)
class Problem:
    """An objective with analytic gradient and seeded initialization.

    eval_loss/eval_grad take (params, batch_seed); deterministic problems
    ignore batch_seed (stochastic=False). optimum holds (params*, loss*)
    when analytically known. meta exposes generator internals (dataset
    arrays, latent separator) for verification tooling; nothing in the
    optimization path reads it.
    """

    name: str
    dim: int
    eval_loss: Callable[[ParamVector, int], float]
    eval_grad: Callable[[ParamVector, int], GradVector]
    init_params: Callable[[int], ParamVector]
    stochastic: bool
    optimum: tuple[ParamVector, float] | None = None
    meta: dict = field(default_factory=dict)


def _epoch_batches(key: int, n: int, batch: int):
    """Batch-index selector: counter c -> indices of the c-th minibatch.

    Epoch e = c // (n // batch) gets its own permutation of range(n); the
    remainder after whole batches is dropped, so every batch has exactly
    `batch` elements and every sample appears once per epoch (up to the
    dropped tail).
    """
    per_epoch = n // batch
    cache: dict[int, np.ndarray] = {}

    def indices(batch_seed: int) -> np.ndarray:
        e, j = divmod(int(batch_seed), per_epoch)
        perm = cache.get(e)
        if perm is None:
            perm = permutation(derive_key(key, 4, e), n)
            cache[e] = perm
        return perm[j * batch : (j + 1) * batch]

    return indices


# ---------------------------------------------------------------------------
# Quadratic
# ---------------------------------------------------------------------------


def quadratic_problem(dim: int, condition_number: float, seed: int) -> Problem:
    """f(theta) = 0.5 * sum(lam_i * theta_i**2) with lam log-spaced in
    [1, condition_number]; gradient lam*theta; optimum at the origin.

    Initialization is uniform on [-2, 2) per coordinate, keyed by the run
    seed mixed with the problem seed.
    """
    if dim < 1:
        raise ConfigError(f"quadratic needs dim >= 1, got {dim}")
    if condition_number < 1:
        raise ConfigError(
            f"condition_number must be >= 1, got {condition_number}"
        )
    lam = np.logspace(0.0, np.log10(condition_number), dim)
    key = derive_key(seed, 1001)

    def loss(params: ParamVector, batch_seed: int) -> float:
        th = params.data
        return float(0.5 * np.dot(lam, th * th))

    def grad(params: ParamVector, batch_seed: int) -> GradVector:
        return GradVector(lam * params.data)

    def init(run_seed: int) -> ParamVector:
        u = uniforms(derive_key(run_seed, 7, key), dim)
        return ParamVector(4.0 * u - 2.0)

    return Problem(
        name="quadratic",
        dim=dim,
        eval_loss=loss,
        eval_grad=grad,
        init_params=init,
        stochastic=False,
        optimum=(ParamVector(np.zeros(dim)), 0.0),
        meta={"lam": lam},
    )


# ---------------------------------------------------------------------------
# Chained banana valley
# ---------------------------------------------------------------------------


def rosenbrock_problem(dim: int) -> Problem:
    """f(theta) = sum_{i<dim-1} [100*(theta_{i+1} - theta_i**2)**2
    + (1 - theta_i)**2], the chained valley; optimum at all-ones with 0.

    Initialization is the classic start (-1.2, 1, -1.2, 1, ...) plus 0.1
    times seeded normals, so distinct run seeds give distinct trajectories.
    """
    if dim < 2:
        raise ConfigError(f"rosenbrock needs dim >= 2, got {dim}")
    key = derive_key(0, 1002)

    def loss(params: ParamVector, batch_seed: int) -> float:
        th = params.data
        d = th[1:] - th[:-1] ** 2
        return float(np.sum(100.0 * d * d + (1.0 - th[:-1]) ** 2))

    def grad(params: ParamVector, batch_seed: int) -> GradVector:
        th = params.data
        d = th[1:] - th[:-1] ** 2
        g = np.zeros(dim)
        g[:-1] += -400.0 * th[:-1] * d - 2.0 * (1.0 - th[:-1])
        g[1:] += 200.0 * d
        return GradVector(g)

    def init(run_seed: int) -> ParamVector:
        base = np.where(np.arange(dim) % 2 == 0, -1.2, 1.0)
        return ParamVector(base + 0.1 * normals(derive_key(run_seed, 7, key), dim))

    return Problem(
        name="rosenbrock",
        dim=dim,
        eval_loss=loss,
        eval_grad=grad,
        init_params=init,
        stochastic=False,
        optimum=(ParamVector(np.ones(dim)), 0.0),
    )


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------

_LOGREG_SCALE_LO = 10.0
_LOGREG_SCALE_HI = 100.0
_LOGREG_MARGIN = 0.5
_LOGREG_FLIP = 0.1
_LOGREG_BATCH = 10


def _logreg_dataset(n: int, dim: int, key: int):
    """One candidate dataset draw; returns (X, y, separator, flipped).

    Generator algorithm (fixed):
      1. unit separator direction u = normalized normals(key, 1)
      2. raw features Xr ~ standard normal, n x dim
      3. margin floor: points with |Xr @ u| < 0.5 are shifted along u to
         sit exactly at margin 0.5, so the latent labels are linearly
         separable with a real gap
      4. labels y = 1[Xr @ u > 0], then each flips with probability 0.1
         (independent uniforms from the key)
      5. column scaling: coordinate j is multiplied by s_j, log-spaced
         from 10 to 100, giving deliberately unnormalized features; the
         separating direction in scaled coordinates is u / s
    """
    scales = np.logspace(
        np.log10(_LOGREG_SCALE_LO), np.log10(_LOGREG_SCALE_HI), dim
    )
    u = normals(derive_key(key, 1), dim)
    u /= np.linalg.norm(u)
    raw = normals(derive_key(key, 2), n * dim).reshape(n, dim)
    z = raw @ u
    short = np.abs(z) < _LOGREG_MARGIN
    raw = raw + np.where(short, np.sign(z) * (_LOGREG_MARGIN - np.abs(z)), 0.0)[
        :, None
    ] * u
    y = ((raw @ u) > 0.0).astype(np.float64)
    flipped = uniforms(derive_key(key, 3), n) < _LOGREG_FLIP
    y = np.where(flipped, 1.0 - y, y)
    return raw * scales, y, u / scales, flipped


def logreg_problem(n_samples: int, dim: int, seed: int) -> Problem:
    """Binary logistic regression on a synthetic linearly-separable-with-
    noise dataset; minibatch mean cross-entropy, analytic logistic gradient.

    See _logreg_dataset for the exact generator. A draw where every label
    agrees is degenerate; generation retries with seed+1 up to 10 times
    before giving up. Initialization is 0.001 times seeded normals (the
    scaled columns make the useful weight range correspondingly small).
    """
    if n_samples < 1 or dim < 1:
        raise ConfigError(
            f"logreg needs n_samples >= 1 and dim >= 1, got {n_samples}, {dim}"
        )
    if n_samples < dim:
        raise ConfigError(
            f"logreg needs n_samples >= dim, got {n_samples} < {dim}"
        )
    attempt = seed
    for _ in range(10):
        key = derive_key(attempt, 3001)
        X, y, separator, flipped = _logreg_dataset(n_samples, dim, key)
        if 0.0 < y.mean() < 1.0:
            break
        attempt += 1
    else:
        raise ConfigError(
            f"logreg dataset degenerate (all one label) after 10 retries "
            f"from seed {seed}"
        )
    batch = min(_LOGREG_BATCH, n_samples)
    batch_of = _epoch_batches(key, n_samples, batch)

    def loss(params: ParamVector, batch_seed: int) -> float:
        idx = batch_of(batch_seed)
        margins = -(2.0 * y[idx] - 1.0) * (X[idx] @ params.data)
        return float(np.mean(np.logaddexp(0.0, margins)))

    def grad(params: ParamVector, batch_seed: int) -> GradVector:
        idx = batch_of(batch_seed)
        # 0.5*(1+tanh(z/2)) is the overflow-safe sigmoid
        p = 0.5 * (1.0 + np.tanh(0.5 * (X[idx] @ params.data)))
        return GradVector(X[idx].T @ (p - y[idx]) / idx.size)

    def init(run_seed: int) -> ParamVector:
        return ParamVector(0.001 * normals(derive_key(run_seed, 7, key), dim))

    return Problem(
        name="logreg",
        dim=dim,
        eval_loss=loss,
        eval_grad=grad,
        init_params=init,
        stochastic=True,
        meta={
            "X": X,
            "y": y,
            "separator": separator,
            "flipped": flipped,
            "batch": batch,
        },
    )


# ---------------------------------------------------------------------------
# Spiral MLP
# ---------------------------------------------------------------------------

_MLP_NOISE = 0.15
_MLP_BATCH = 32


def _spiral_dataset(n: int, key: int):
    """Two interleaved spiral arms in the plane, one per class.

    Arm c's i-th point sits at parameter u = (i + 0.5)/count, angle
    3*pi*u + pi*c, radius u, plus Gaussian jitter of scale 0.15. Class 0
    gets the extra point when n is odd.
    """
    counts = [(n + 1) // 2, n // 2]
    xs, ys = [], []
    for c, count in enumerate(counts):
        u = (np.arange(count) + 0.5) / count
        phi = 3.0 * np.pi * u + np.pi * c
        pts = np.stack([u * np.cos(phi), u * np.sin(phi)], axis=1)
        pts = pts + _MLP_NOISE * normals(derive_key(key, 10 + c), count * 2).reshape(
            count, 2
        )
        xs.append(pts)
        ys.append(np.full(count, c, dtype=np.int64))
    return np.concatenate(xs), np.concatenate(ys)


def mlp_problem(layer_sizes: list[int], n_samples: int, seed: int) -> Problem:
    """Dense tanh network with softmax cross-entropy on the spiral dataset,
    gradients by manual backpropagation.

    layer_sizes runs input to output; the spiral is planar two-class data,
    so the first entry must be 2 and the last must be 2. Total parameter
    count is capped at 50,000. Weights and biases initialize uniform on
    (-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer from the run seed.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ConfigError(f"mlp needs at least 2 layers, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"mlp layer sizes must be >= 1, got {sizes}")
    if sizes[0] != 2 or sizes[-1] != 2:
        raise ConfigError(
            f"mlp input and output widths must both be 2 (planar two-class "
            f"data), got {sizes}"
        )
    if n_samples < 2:
        raise ConfigError(f"mlp needs n_samples >= 2, got {n_samples}")
    shapes = list(zip(sizes[:-1], sizes[1:]))
    dim = sum(a * b + b for a, b in shapes)
    if dim > _MAX_MLP_PARAMS:
        raise ConfigError(
            f"mlp has {dim} parameters, over the {_MAX_MLP_PARAMS} cap"
        )
    manifest: Manifest = []
    offset = 0
    for li, (a, b) in enumerate(shapes):
        manifest.append((f"w{li}", offset, a * b))
        offset += a * b
        manifest.append((f"b{li}", offset, b))
        offset += b

    key = derive_key(seed, 4001)
    X, y = _spiral_dataset(n_samples, key)
    batch = min(_MLP_BATCH, n_samples)
    batch_of = _epoch_batches(key, n_samples, batch)

    def unpack(th: np.ndarray):
        ws, bs, off = [], [], 0
        for a, b in shapes:
            ws.append(th[off : off + a * b].reshape(a, b))
            off += a * b
            bs.append(th[off : off + b])
            off += b
        return ws, bs

    def forward(th: np.ndarray, idx: np.ndarray):
        ws, bs = unpack(th)
        h = X[idx]
        acts = [h]
        for li in range(len(shapes) - 1):
            h = np.tanh(h @ ws[li] + bs[li])
            acts.append(h)
        logits = h @ ws[-1] + bs[-1]
        zmax = logits.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
        nll = lse - logits[np.arange(idx.size), y[idx]]
        probs = np.exp(logits - lse[:, None])
        return float(nll.mean()), acts, probs, ws

    def loss(params: ParamVector, batch_seed: int) -> float:
        return forward(params.data, batch_of(batch_seed))[0]

    def grad(params: ParamVector, batch_seed: int) -> GradVector:
        idx = batch_of(batch_seed)
        _, acts, probs, ws = forward(params.data, idx)
        delta = probs
        delta[np.arange(idx.size), y[idx]] -= 1.0
        delta /= idx.size
        grads_w = [np.empty(0)] * len(shapes)
        grads_b = [np.empty(0)] * len(shapes)
        for li in range(len(shapes) - 1, -1, -1):
            grads_w[li] = acts[li].T @ delta
            grads_b[li] = delta.sum(axis=0)
            if li > 0:
                delta = (delta @ ws[li].T) * (1.0 - acts[li] ** 2)
        flat = np.concatenate(
            [np.concatenate([gw.ravel(), gb]) for gw, gb in zip(grads_w, grads_b)]
        )
        return GradVector(flat)

    def init(run_seed: int) -> ParamVector:
        th = np.empty(dim)
        off = 0
        for li, (a, b) in enumerate(shapes):
            scale = 1.0 / np.sqrt(a)
            w = (2.0 * uniforms(derive_key(run_seed, 7, key, li, 0), a * b) - 1.0)
            bb = (2.0 * uniforms(derive_key(run_seed, 7, key, li, 1), b) - 1.0)
            th[off : off + a * b] = scale * w
            off += a * b
            th[off : off + b] = scale * bb
            off += b
        return ParamVector(th, manifest)

    return Problem(
        name="mlp",
        dim=dim,
        eval_loss=loss,
        eval_grad=grad,
        init_params=init,
        stochastic=True,
        meta={"X": X, "y": y, "layer_sizes": sizes, "batch": batch},
    )


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


def finite_diff_grad(
    problem: Problem, params: ParamVector, batch_seed: int, h: float
) -> GradVector:
    """Central-difference reference gradient: (f(x+h*e_i) - f(x-h*e_i))
    / (2h) per coordinate, on the same batch_seed as the analytic
    evaluation.
    """
    if not h > 0:
        raise ConfigError(f"finite difference step must be > 0, got {h}")
    base = params.data
    out = np.empty(base.size)
    for i in range(base.size):
        probe = base.copy()
        probe[i] = base[i] + h
        hi = problem.eval_loss(params.with_data(probe), batch_seed)
        probe[i] = base[i] - h
        lo = problem.eval_loss(params.with_data(probe), batch_seed)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NumericError(
                f"non-finite objective at finite-difference probe, "
                f"coordinate {i}"
            )
        out[i] = (hi - lo) / (2.0 * h)
    return GradVector(out)


PROBLEM_BUILDERS = {
    "quadratic": quadratic_problem,
    "rosenbrock": rosenbrock_problem,
    "logreg": logreg_problem,
    "mlp": mlp_problem,
}
