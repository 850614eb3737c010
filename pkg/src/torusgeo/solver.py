"""Shortest closed geodesics in a winding class by discrete action descent.

The objective is the action A_F, not the length: the length is degenerate
under reparametrization, while action minimizers are constant-speed length
minimizers (Cauchy-Schwarz equality). The descent direction is the gradient
preconditioned by the inverse loop Laplacian (a Sobolev gradient, solved per
coordinate with the FFT); this removes the N^2 stiffness of the fine vertex
modes while the stopping test stays on the raw gradient. Steps are chosen by
Armijo backtracking, so the action sequence is strictly non-increasing.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputDomainError, SolverFailureError, TrivialClassError
from .loops import (
    DiscreteLoop,
    action,
    cs_gap,
    length,
    reparametrize_constant_speed,
    require_nontrivial,
)
from .metrics import FinslerMetric, comparison_constant


@dataclass(frozen=True)
class SolverConfig:
    n_vertices: int = 64
    max_iters: int = 2000
    step_init: float = 1.0
    step_shrink: float = 0.5
    armijo: float = 1e-4
    grad_tol: float = 1e-8
    num_starts: int = 1
    cluster_tol: float = 0.05
    length_tol_rel: float = 1e-3
    jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_vertices < 32:
            raise InputDomainError("n_vertices must be >= 32")
        if self.grad_tol <= 0 or self.cluster_tol <= 0:
            raise InputDomainError("grad_tol and cluster_tol must be positive")
        if self.num_starts < 1:
            raise InputDomainError("num_starts must be >= 1")


def min_reference_length(winding: tuple[int, int]) -> float:
    """Exact g-minimum sqrt(p^2 + q^2): straight lines minimize on the flat torus."""
    require_nontrivial(winding)
    return float(np.hypot(winding[0], winding[1]))


def speed_bound(metric: FinslerMetric, winding: tuple[int, int],
                grid_resolution: int = 64) -> float:
    """A-priori reference-speed bound c_F^2 * min-class-length for F-minimizers."""
    c = comparison_constant(metric, grid_resolution)
    return c * c * min_reference_length(winding)


def verify_speed_cap(metric: FinslerMetric, loop: DiscreteLoop, winding: tuple[int, int],
                     grid_resolution: int = 64) -> bool:
    """True iff every segment speed respects the a-priori bound (tiny slack for roundoff)."""
    top = float(np.linalg.norm(loop.velocities, axis=1).max())
    return top <= speed_bound(metric, winding, grid_resolution) * (1.0 + 1e-6)


def action_gradient(metric: FinslerMetric, loop: DiscreteLoop) -> np.ndarray:
    """Analytic gradient of the discrete action with respect to the vertices."""
    n = loop.n_vertices
    gx, gv = metric.speed_sq_grads(loop.midpoints, loop.velocities)
    # segment i depends on x_i (midpoint half, velocity -N) and x_{i+1} (+N)
    grad = 0.5 * (gx + np.roll(gx, 1, axis=0)) / n + np.roll(gv, 1, axis=0) - gv
    return grad


def _action_of(metric: FinslerMetric, verts: np.ndarray, winding) -> float:
    return action(metric, DiscreteLoop(verts, winding))


def _precond_factors(n: int, kappa: float = 1.0, c: float = 0.5) -> np.ndarray:
    """FFT symbol of kappa * (c*I + 2n*L), L the loop Laplacian.

    This is the Hessian of the flat action up to the constant c, which keeps
    the translation modes (the Laplacian kernel) controllable; kappa absorbs
    how far the metric's curvature can exceed the flat one.
    """
    k = np.arange(n)
    lam = 2.0 * n * (2.0 - 2.0 * np.cos(2.0 * np.pi * k / n))
    return kappa * (lam + c)


@dataclass
class SolveResult:
    loop: DiscreteLoop
    converged: bool
    iterations: int
    action: float
    length: float
    action_history: list = field(default_factory=list, repr=False)


def shortest_loop(metric: FinslerMetric, winding: tuple[int, int], config: SolverConfig,
                  init: DiscreteLoop | str = "straight") -> SolveResult:
    """Minimize the discrete action over vertex positions at fixed winding.

    The returned loop is reparametrized to constant F-speed; its action never
    exceeds that of the initial loop. Non-convergence within max_iters returns
    the best iterate flagged `converged=False`.
    """
    require_nontrivial(winding)
    rng = np.random.default_rng(config.seed)
    if isinstance(init, str):
        if init != "straight":
            raise InputDomainError(f"unknown init {init!r}")
        base = DiscreteLoop.straight(winding, config.n_vertices, offset=rng.random(2))
        verts = base.vertices + rng.uniform(-config.jitter, config.jitter,
                                            size=base.vertices.shape)
    else:
        if init.winding != tuple(winding):
            raise InputDomainError("initial loop has the wrong winding class")
        verts = init.vertices.copy()

    n = len(verts)
    kappa = comparison_constant(metric, grid_resolution=16) ** 2
    symbol = _precond_factors(n, kappa)[:, None]
    x = verts
    a = _action_of(metric, x, winding)
    history = [a]
    step = config.step_init
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        g = action_gradient(metric, DiscreteLoop(x, winding))
        if np.abs(g).max() <= config.grad_tol:
            converged = True
            break
        d = np.real(np.fft.ifft(np.fft.fft(g, axis=0) / symbol, axis=0))
        slope = float((g * d).sum())
        s = step
        accepted = False
        for _ in range(60):
            xn = x - s * d
            an = _action_of(metric, xn, winding)
            if an <= a - config.armijo * s * slope:
                accepted = True
                break
            s *= config.step_shrink
        if not accepted:
            break  # line search stalled at numerical precision
        x, a = xn, an
        history.append(a)
        step = min(s * 2.0, config.step_init)

    out = reparametrize_constant_speed(metric, DiscreteLoop(x, winding))
    return SolveResult(loop=out, converged=converged, iterations=it,
                       action=action(metric, out), length=length(metric, out),
                       action_history=history)


def _torus_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise torus distances between point sets (n,2) and (m,2)."""
    d = np.abs(a[:, None, :] - b[None, :, :]) % 1.0
    d = np.minimum(d, 1.0 - d)
    return np.sqrt((d ** 2).sum(axis=-1))


def loop_distance(a: DiscreteLoop, b: DiscreteLoop) -> float:
    """Symmetric Hausdorff distance between vertex sets projected to T^2."""
    if a.winding != b.winding:
        raise InputDomainError(f"winding mismatch: {a.winding} vs {b.winding}")
    d = _torus_pairwise(np.mod(a.vertices, 1.0), np.mod(b.vertices, 1.0))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True)
class MinimizerCluster:
    representative: DiscreteLoop
    size: int
    length: float


@dataclass(frozen=True)
class MinimizerReport:
    clusters: tuple[MinimizerCluster, ...]
    spread: float
    best_length: float
    n_converged: int

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def _single_linkage(dist: np.ndarray, tol: float) -> list[list[int]]:
    n = len(dist)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def minimizer_set(metric: FinslerMetric, winding: tuple[int, int],
                  config: SolverConfig) -> MinimizerReport:
    """Multi-start descent; cluster the near-optimal minima and report their spread.

    Starts are straight lifts translated by stratified offsets along the class
    normal, plus seeded jitter, so a continuum of minimizers (the flat case)
    is witnessed rather than collapsed onto one representative.
    """
    require_nontrivial(winding)
    rng = np.random.default_rng(config.seed)
    gnorm = min_reference_length(winding)
    normal = np.array([-winding[1], winding[0]], float) / gnorm
    results = []
    for k in range(config.num_starts):
        offset = ((k + rng.random()) / config.num_starts) * normal \
            + rng.uniform(-config.jitter, config.jitter, size=2)
        base = DiscreteLoop.straight(winding, config.n_vertices, offset=offset)
        init = DiscreteLoop(
            base.vertices + rng.uniform(-config.jitter, config.jitter,
                                        size=base.vertices.shape),
            winding)
        res = shortest_loop(metric, winding, config, init=init)
        if res.converged:
            results.append(res)
    if not results:
        raise SolverFailureError("no descent run converged")

    best = min(r.length for r in results)
    kept = [r for r in results if r.length <= best * (1.0 + config.length_tol_rel)]
    # canonical order: by length, then lexicographically by projected vertices
    kept.sort(key=lambda r: (r.length, tuple(np.round(np.mod(r.loop.vertices, 1.0), 12).ravel())))
    loops = [r.loop for r in kept]
    m = len(loops)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            dist[i, j] = dist[j, i] = loop_distance(loops[i], loops[j])
    spread = float(dist.max()) if m > 1 else 0.0
    clusters = []
    for idx in _single_linkage(dist, config.cluster_tol):
        rep = min(idx, key=lambda i: (kept[i].length, i))
        clusters.append(MinimizerCluster(representative=loops[rep], size=len(idx),
                                         length=kept[rep].length))
    clusters.sort(key=lambda c: (c.length,
                                 tuple(np.round(np.mod(c.representative.vertices, 1.0), 12).ravel())))
    return MinimizerReport(clusters=tuple(clusters), spread=spread,
                           best_length=best, n_converged=len(results))


def refine(loop: DiscreteLoop) -> DiscreteLoop:
    """Double the vertex count by inserting segment midpoints (for restart)."""
    c = loop.closed_lift
    mids = 0.5 * (c[:-1] + c[1:])
    verts = np.empty((2 * loop.n_vertices, 2))
    verts[0::2] = loop.vertices
    verts[1::2] = mids
    return DiscreteLoop(verts, loop.winding)
