"""Property suites behind the ``check`` CLI verb.

Each suite sweeps seeded random instances through the module invariants and
reports the worst observed value against the documented tolerance. The suites
call the public operations through their modules, so fault injection (e.g.
monkeypatching ``manifold.exp_map``) is visible to them.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import gradcheck, manifold, regularizer
from .data import gen_blobs, normalize
from .manifold import GrassmannPoint, TangentVector
from .nn import Trainer, build_mlp
from .nn.layers import softmax_ce
from .regularizer import LayerColumns

__all__ = ["CheckResult", "run_manifold_suite", "run_regularizer_suite",
           "run_gradcheck_suite", "run_all", "format_report"]

MANIFOLD_DIMS = (2, 3, 16, 257)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    worst: float
    tolerance: float
    count: int

    def line(self) -> str:
        status = "ok " if self.passed else "FAIL"
        return (
            f"  [{status}] {self.suite}.{self.name}: worst {self.worst:.3e} "
            f"(tol {self.tolerance:.0e}, {self.count} instances)"
        )


def _random_tangent(y: GrassmannPoint, rng, norm=None) -> TangentVector:
    h = manifold.project_tangent(y, rng.standard_normal(y.dim))
    nh = h.norm()
    if nh < 1e-12:
        return manifold.zero_tangent(y)
    if norm is None:
        return h
    return TangentVector(h.v * (norm / nh), y)


def run_manifold_suite(seed=0, instances=1000, dims=MANIFOLD_DIMS) -> list[CheckResult]:
    """Tangency, unit-norm closure, periodicity, isometry, transported tangency,
    geodesic consistency, and the self-translation identity, over random sweeps."""
    rng = np.random.default_rng(seed)
    worst = {
        "tangency": 0.0,
        "unit_norm_closure": 0.0,
        "periodicity": 0.0,
        "translation_isometry": 0.0,
        "transported_tangency": 0.0,
        "geodesic_consistency": 0.0,
        "self_translation_identity": 0.0,
    }
    total = 0
    for n in dims:
        for _ in range(instances):
            total += 1
            y = GrassmannPoint.random(n, rng)
            g = rng.standard_normal(n) * 10.0 ** rng.uniform(-2, 2)

            h = manifold.project_tangent(y, g)
            worst["tangency"] = max(
                worst["tangency"],
                abs(float(y.y @ h.v)) / (1.0 + float(np.linalg.norm(g))),
            )

            h1 = _random_tangent(y, rng, norm=rng.uniform(0.01, math.pi))
            y1 = manifold.exp_map(y, h1)
            worst["unit_norm_closure"] = max(
                worst["unit_norm_closure"], abs(float(np.linalg.norm(y1.y)) - 1.0)
            )

            wrapped = TangentVector((1.0 + 2.0 * math.pi / h1.norm()) * h1.v, y)
            y_wrapped = manifold.exp_map(y, wrapped)
            worst["periodicity"] = max(
                worst["periodicity"], float(np.max(np.abs(y1.y - y_wrapped.y)))
            )

            delta = _random_tangent(y, rng)
            moved = manifold.parallel_translate(y, delta, h1)
            worst["translation_isometry"] = max(
                worst["translation_isometry"],
                abs(moved.norm() - delta.norm()) / (1.0 + delta.norm()),
            )
            worst["transported_tangency"] = max(
                worst["transported_tangency"],
                abs(float(y1.y @ moved.v)) / (1.0 + moved.norm()),
            )

            h_small = _random_tangent(y, rng, norm=rng.uniform(0.0, math.pi / 2 * 0.999))
            angle = manifold.geodesic_angle(y, manifold.exp_map(y, h_small))
            worst["geodesic_consistency"] = max(
                worst["geodesic_consistency"], abs(angle - h_small.norm())
            )

            self_t = manifold.parallel_translate_self(y, h1)
            general = manifold.parallel_translate(y, h1, h1)
            worst["self_translation_identity"] = max(
                worst["self_translation_identity"], float(np.max(np.abs(self_t.v - general.v)))
            )

    tolerances = {
        "tangency": 1e-12,
        "unit_norm_closure": 1e-12,
        "periodicity": 1e-9,
        "translation_isometry": 1e-12,
        "transported_tangency": 1e-9,
        "geodesic_consistency": 1e-9,
        "self_translation_identity": 1e-12,
    }
    return [
        CheckResult("manifold", name, worst[name] < tol, worst[name], tol, total)
        for name, tol in tolerances.items()
    ]


def _unit_columns(n, p, rng):
    y = rng.standard_normal((n, p))
    return y / np.linalg.norm(y, axis=0)


def run_regularizer_suite(seed=0, fd_instances=20, minimum_instances=100,
                          descent_instances=150) -> list[CheckResult]:
    """Gradient exactness, the shared-minimum property, and the descent direction."""
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(fd_instances):
        n = int(rng.choice([4, 8]))
        p = int(rng.integers(2, n))  # p = 1 has an exactly-zero gradient, nothing to compare
        layer = LayerColumns(_unit_columns(n, p, rng), alpha=0.1)
        analytic = regularizer.ortho_grad(layer).ravel()

        def loss_flat(flat, shape=(n, p), alpha=layer.alpha):
            y = flat.reshape(shape)
            gram = y.T @ y
            off = gram - np.eye(shape[1])
            return 0.5 * alpha * float(np.sum(off * off))

        numeric = gradcheck.fd_gradient(loss_flat, layer.Y.ravel(), eps=1e-6)
        # Vector-relative: per-coordinate ratios blow up on near-zero entries.
        scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-8)
        worst = max(worst, float(np.max(np.abs(analytic - numeric))) / scale)
    results.append(CheckResult("regularizer", "ortho_grad_fd", worst < 1e-6, worst, 1e-6, fd_instances))

    worst_gap = -np.inf
    count = 0
    for sigma in (1e-2, 1e-3, 1e-4):
        for _ in range(minimum_instances):
            count += 1
            n = int(rng.choice([4, 8, 16]))
            p = int(rng.integers(1, n))
            y = _unit_columns(n, p, rng)
            q = np.linalg.qr(y)[0][:, :p]
            lc_y = regularizer.complexity_loss(LayerColumns(y, 0.1, sigma))
            lc_q = regularizer.complexity_loss(LayerColumns(q, 0.1, sigma))
            worst_gap = max(worst_gap, lc_q - lc_y)
    results.append(
        CheckResult("regularizer", "orthonormal_minimum", worst_gap <= 0.0, worst_gap, 0.0, count)
    )

    worst_ip = np.inf
    for _ in range(descent_instances):
        n = int(rng.choice([4, 8, 32]))
        p = int(rng.integers(1, n))
        y = _unit_columns(n, p, rng)
        layer = LayerColumns(y, alpha=0.1)
        if np.linalg.matrix_rank(layer.Y) < p:
            continue
        worst_ip = min(worst_ip, regularizer.descent_check(layer, int(rng.integers(p))))
    results.append(
        CheckResult("regularizer", "descent_direction", worst_ip >= -1e-8, worst_ip, -1e-8,
                    descent_instances)
    )
    return results


class _ColumnObjective:
    """Full training objective (CE loss + ortho penalty) as a function of one column."""

    def __init__(self, trainer: Trainer, ref, batch_x, batch_y):
        self.trainer = trainer
        self.ref = ref
        self.batch_x = batch_x
        self.batch_y = batch_y
        self.wname = trainer._weight_name(ref.layer_index)

    def _matrix(self):
        return self.trainer.net.layers[self.ref.layer_index].weight_matrix()

    def _penalty(self):
        total = 0.0
        for k in self.trainer.partition.grassmann_layers:
            wm = self.trainer.net.layers[k].weight_matrix()
            cols = wm / np.linalg.norm(wm, axis=0)
            total += regularizer.ortho_loss(LayerColumns(cols, self.trainer.alpha))
        return total

    def f(self, y: GrassmannPoint) -> float:
        wm = self._matrix()
        saved = wm[:, self.ref.column].copy()
        wm[:, self.ref.column] = y.y
        try:
            logits, _ = self.trainer.net.forward(self.batch_x, training=True)
            loss, _ = softmax_ce(logits, self.batch_y)
            return loss + self._penalty()
        finally:
            wm[:, self.ref.column] = saved

    def grad(self, y: GrassmannPoint) -> np.ndarray:
        wm = self._matrix()
        saved = wm[:, self.ref.column].copy()
        wm[:, self.ref.column] = y.y
        try:
            _, grads, _ = self.trainer.net.loss_and_grads(self.batch_x, self.batch_y, training=True)
            g = grads[self.ref.layer_index][self.wname].reshape(wm.shape)[:, self.ref.column].copy()
            lc = LayerColumns(wm, self.trainer.alpha)
            g += regularizer.ortho_grad(lc)[:, self.ref.column]
            return g
        finally:
            wm[:, self.ref.column] = saved


def network_checkpoint_objectives(seed=0, checkpoints=20, steps_between=5):
    """Train a toy BN network and yield a column objective at each checkpoint."""
    rng = np.random.default_rng(seed)
    ds = normalize(gen_blobs(seed, n_per_class=40, classes=3, dim=12, spread=0.6))
    net = build_mlp(12, (6, 4), 3, rng)
    trainer = Trainer(net, "sgd-g", rng=rng, alpha=0.1)
    batch = (ds.train_x[:32], ds.train_y[:32])
    objectives = []
    for c in range(checkpoints):
        for _ in range(steps_between):
            trainer.train_epoch(ds.train_x, ds.train_y, 32, 0.2, 0.01)
        ref = trainer.partition.points[c % len(trainer.partition.points)]
        objectives.append((_ColumnObjective(trainer, ref, *batch), trainer._read_point(ref)))
    return objectives


def run_gradcheck_suite(seed=0, checkpoints=20) -> list[CheckResult]:
    """Analytic manifold objectives and the full BN-network objective."""
    rng = np.random.default_rng(seed)
    results = []

    n = 16
    basis = rng.standard_normal((n, n))
    a = basis + basis.T
    y = GrassmannPoint.random(n, rng)
    report = gradcheck.riemannian_fd_check(
        lambda pt: float(pt.y @ a @ pt.y), lambda pt: 2.0 * (a @ pt.y), y,
        trials=100, rng=rng,
    )
    results.append(CheckResult("gradcheck", "quadratic_objective", report.passed(1e-5),
                               report.max_rel_error, 1e-5, len(report.rows)))

    c = rng.standard_normal(n)
    report = gradcheck.riemannian_fd_check(
        lambda pt: float(c @ pt.y) ** 2, lambda pt: 2.0 * float(c @ pt.y) * c, y,
        trials=100, rng=rng,
    )
    results.append(CheckResult("gradcheck", "linear_squared_objective", report.passed(1e-5),
                               report.max_rel_error, 1e-5, len(report.rows)))

    worst = 0.0
    count = 0
    for objective, point in network_checkpoint_objectives(seed=seed, checkpoints=checkpoints):
        report = gradcheck.riemannian_fd_check(objective.f, objective.grad, point,
                                               trials=5, rng=rng)
        worst = max(worst, report.max_rel_error)
        count += len(report.rows)
    results.append(CheckResult("gradcheck", "bn_network_objective", worst < 1e-4, worst, 1e-4, count))
    return results


def run_all(seed=0) -> list[CheckResult]:
    results = run_manifold_suite(seed)
    results += run_regularizer_suite(seed)
    results += run_gradcheck_suite(seed)
    return results


def format_report(results) -> str:
    lines = []
    suites = []
    for r in results:
        if r.suite not in suites:
            suites.append(r.suite)
    for suite in suites:
        chunk = [r for r in results if r.suite == suite]
        passed = sum(r.passed for r in chunk)
        lines.append(f"{suite}: {passed}/{len(chunk)} properties passed")
        lines.extend(r.line() for r in chunk)
    total_passed = sum(r.passed for r in results)
    lines.append(f"total: {total_passed}/{len(results)} properties passed")
    return "\n".join(lines)
