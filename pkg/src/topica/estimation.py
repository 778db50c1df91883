"""Gradient-ascent estimation of the topographic filter bank.

The model keeps an orthonormal filter matrix in whitened space and
scores a sample batch by neighborhood-pooled squared filter responses:
each unit's pooled energy u_i is the sum of squared responses over its
lattice neighborhood, and the batch objective is the mean of
G(u) = -sqrt(epsilon + u) over units and samples. With a radius-0
lattice the pooling disappears and the estimator reduces to plain ICA
with the same smooth sparsity score, which is how the ICA baseline is
produced here.

Training ascends the exact objective gradient with symmetric
re-orthonormalization after every step and an adaptive step size
controlled by a fixed held-out batch: an improving pass grows the step
by 1.2x (capped at 1.0), a non-improving pass is retried from the
pre-pass filters at half the step, and a step below 1e-6 stops training.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    Diverged,
    FormatError,
    ModelMismatch,
    SingularMatrix,
)
from .images import PatchSet
from .matrixio import content_hash, format_float, read_matrix, read_meta, write_matrix, write_meta
from .topography import Topography
from .whitening import WhiteningModel, whiten

STEP_FLOOR = 1e-6
STEP_GROWTH = 1.2
STEP_SHRINK = 0.5
STEP_CAP = 1.0

FILTERS_FILE = "filter_matrix.ticm"
BASIS_FILE = "basis_matrix.ticm"
META_FILE = "basis.meta"
LOG_FILE = "training_log.csv"


@dataclass
class TrainConfig:
    step0: float = 0.1
    epsilon: float = 0.005
    max_iters: int = 500
    tol: float = 1e-4
    seed: int = 0
    batch_size: int = 0          # 0 = full batch
    holdout_size: int = 1000

    def __post_init__(self):
        if self.step0 <= 0:
            raise ConfigError(f"step0 must be > 0, got {self.step0}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol < 0:
            raise ConfigError(f"tol must be >= 0, got {self.tol}")
        if self.batch_size < 0:
            raise ConfigError(f"batch_size must be >= 0, got {self.batch_size}")
        if self.holdout_size < 1:
            raise ConfigError(f"holdout_size must be >= 1, got {self.holdout_size}")


@dataclass
class TrainingRecord:
    iteration: int
    objective: float
    step: float
    ortho_error: float


@dataclass(eq=False)
class BasisModel:
    """Trained filter bank, its pixel-space basis, and training metadata."""

    filters: np.ndarray          # (n, k) orthonormal rows, whitened space
    basis: np.ndarray            # (n_pixels, n), columns are basis images
    topo: Topography
    whitening_ref: str
    kind: str                    # "TICA" or "ICA"
    epsilon: float
    seed: int
    training_log: list = field(default_factory=list)

    @property
    def n_units(self) -> int:
        return self.filters.shape[0]

    @property
    def patch_side(self) -> int:
        side = int(np.sqrt(self.basis.shape[0]))
        if side * side != self.basis.shape[0]:
            raise DimensionMismatch(f"basis rows {self.basis.shape[0]} are not a square count")
        return side

    def identity_hash(self) -> str:
        return content_hash(
            "topica-basis-v1",
            self.kind,
            float(self.epsilon),
            self.topo.width,
            self.topo.height,
            self.topo.radius,
            self.topo.permutation.astype(np.float64),
            self.whitening_ref,
            self.filters,
            self.basis,
        )


def _score(u: np.ndarray, epsilon: float) -> np.ndarray:
    """G(u) = -sqrt(epsilon + u); smooth sparsity score of pooled energy."""
    return -np.sqrt(epsilon + u)


def _score_deriv(u: np.ndarray, epsilon: float) -> np.ndarray:
    """G'(u) = -1 / (2 sqrt(epsilon + u))."""
    return -0.5 / np.sqrt(epsilon + u)


def _check_dims(filters: np.ndarray, z: np.ndarray, topo: Topography) -> None:
    n, k = filters.shape
    if n != topo.n_units:
        raise DimensionMismatch(f"{n} filters for a {topo.n_units}-unit lattice")
    if z.shape[-1] != k:
        raise DimensionMismatch(f"samples have {z.shape[-1]} dims, filters expect {k}")


def local_energies(filters: np.ndarray, z: np.ndarray, topo: Topography) -> np.ndarray:
    """Neighborhood-pooled squared responses u_i for one whitened sample."""
    filters = np.asarray(filters, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise DimensionMismatch(f"expected a single sample vector, got shape {z.shape}")
    _check_dims(filters, z, topo)
    responses = filters @ z
    return topo.h @ (responses * responses)


def tica_objective(filters: np.ndarray, batch: np.ndarray, topo: Topography,
                   epsilon: float) -> float:
    """Mean pooled-energy score of a whitened batch; higher is better.

    J = (1/T) sum_t sum_i G(u_i(t)) with G(u) = -sqrt(epsilon + u) and
    u_i(t) the neighborhood-pooled squared responses of sample t.
    """
    filters = np.asarray(filters, dtype=np.float64)
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    _check_dims(filters, batch, topo)
    responses = batch @ filters.T
    pooled = (responses * responses) @ topo.h    # h is symmetric
    return float(_score(pooled, epsilon).sum() / batch.shape[0])


def tica_gradient(filters: np.ndarray, batch: np.ndarray, topo: Topography,
                  epsilon: float) -> np.ndarray:
    """Exact gradient of `tica_objective` with respect to the filters.

    Row i is (2/T) sum_t z_t (w_i . z_t) r_i(t) where
    r_i(t) = sum_j h(i,j) G'(u_j(t)): the squared response of unit i
    feeds every neighborhood containing i, and differentiating the
    square contributes the factor 2.
    """
    filters = np.asarray(filters, dtype=np.float64)
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    _check_dims(filters, batch, topo)
    responses = batch @ filters.T                      # (T, n)
    pooled = (responses * responses) @ topo.h          # (T, n)
    feedback = _score_deriv(pooled, epsilon) @ topo.h  # (T, n)
    return 2.0 / batch.shape[0] * (responses * feedback).T @ batch


def orthonormality_error(filters: np.ndarray) -> float:
    """Frobenius distance of W W^T from the identity."""
    n = filters.shape[0]
    return float(np.linalg.norm(filters @ filters.T - np.eye(n)))


def symmetric_orthonormalize(filters: np.ndarray) -> np.ndarray:
    """Project onto the nearest matrix with orthonormal rows.

    Computes (W W^T)^(-1/2) W through the eigendecomposition of W W^T.
    Raises SingularMatrix when W W^T has condition number above 1e12.
    """
    filters = np.asarray(filters, dtype=np.float64)
    gram = filters @ filters.T
    vals, vecs = np.linalg.eigh(gram)
    if vals[-1] <= 0 or vals[0] <= 0 or vals[-1] / vals[0] > 1e12:
        raise SingularMatrix("filter Gram matrix is numerically singular")
    inv_root = (vecs / np.sqrt(vals)[None, :]) @ vecs.T
    return inv_root @ filters


def _initial_filters(n: int, k: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    return symmetric_orthonormalize(rng.standard_normal((n, k)))


def _batch_slices(order: np.ndarray, batch_size: int):
    if batch_size <= 0 or batch_size >= order.size:
        return [order]
    return [order[i:i + batch_size] for i in range(0, order.size, batch_size)]


def train(patches: PatchSet, whitening: WhiteningModel, topo: Topography,
          config: TrainConfig | None = None, init_filters: np.ndarray | None = None) -> BasisModel:
    """Estimate the filter bank on whitened patches by gradient ascent.

    Parameters
    ----------
    patches : PatchSet
        Training patches (pixel space); whitened internally.
    whitening : WhiteningModel
        Transform fitted on the same data distribution. Its dimension k
        must equal the number of lattice units.
    topo : Topography
        Unit lattice; radius 0 yields a plain ICA model.
    config : TrainConfig
        Step schedule, batch policy, and seeding. Defaults follow the
        standard configuration (start step 0.1, epsilon 0.005).
    init_filters : ndarray, optional
        Starting filters (orthonormalized before use). Defaults to a
        seeded random orthonormal matrix.

    Returns
    -------
    BasisModel
        With orthonormal whitened-space filters, the pixel-space basis
        matrix (dewhitened filter transposes), and a per-iteration log of
        (iteration, held-out objective, step size, orthonormality error).
    """
    if config is None:
        config = TrainConfig()
    z = whiten(whitening, patches)
    n_samples = z.shape[0]
    n = topo.n_units
    if whitening.k != n:
        raise DimensionMismatch(
            f"whitening keeps k={whitening.k} components but the lattice has {n} units"
        )

    seed_seq = np.random.SeedSequence(config.seed)
    init_ss, holdout_ss, batch_ss = seed_seq.spawn(3)
    if init_filters is None:
        filters = _initial_filters(n, whitening.k, init_ss)
    else:
        filters = symmetric_orthonormalize(np.asarray(init_filters, dtype=np.float64))
        if filters.shape != (n, whitening.k):
            raise DimensionMismatch(
                f"init_filters shape {filters.shape}, expected ({n}, {whitening.k})"
            )

    n_holdout = min(config.holdout_size, max(1, n_samples // 5))
    holdout_idx = np.sort(np.random.default_rng(holdout_ss).choice(
        n_samples, size=n_holdout, replace=False))
    train_idx = np.setdiff1d(np.arange(n_samples), holdout_idx)
    if train_idx.size == 0:
        train_idx = holdout_idx
    holdout = z[holdout_idx]
    batch_rng = np.random.default_rng(batch_ss)

    step = config.step0
    objective = tica_objective(filters, holdout, topo, config.epsilon)
    if not np.isfinite(objective):
        raise Diverged(f"initial objective is {objective}")
    log = [TrainingRecord(0, objective, step, orthonormality_error(filters))]

    order = None
    for iteration in range(1, config.max_iters + 1):
        if order is None:
            if config.batch_size > 0:
                order = batch_rng.permutation(train_idx)
            else:
                order = train_idx
        candidate = filters
        for batch_idx in _batch_slices(order, config.batch_size):
            grad = tica_gradient(candidate, z[batch_idx], topo, config.epsilon)
            candidate = symmetric_orthonormalize(candidate + step * grad)
        candidate_objective = tica_objective(candidate, holdout, topo, config.epsilon)
        if not np.isfinite(candidate_objective):
            raise Diverged(f"objective became {candidate_objective} at iteration {iteration}")

        if candidate_objective > objective:
            delta = float(np.linalg.norm(candidate - filters))
            filters, objective = candidate, candidate_objective
            step = min(step * STEP_GROWTH, STEP_CAP)
            order = None
            log.append(TrainingRecord(iteration, objective, step, orthonormality_error(filters)))
            if delta < config.tol:
                break
        else:
            # Retry the same pass from the pre-pass filters at half the step.
            step *= STEP_SHRINK
            log.append(TrainingRecord(iteration, objective, step, orthonormality_error(filters)))
            if step < STEP_FLOOR:
                break

    basis = whitening.inverse @ filters.T
    return BasisModel(
        filters=filters,
        basis=basis,
        topo=topo,
        whitening_ref=whitening.identity_hash(),
        kind="ICA" if topo.radius == 0 else "TICA",
        epsilon=config.epsilon,
        seed=config.seed,
        training_log=log,
    )


def ica_train(patches: PatchSet, whitening: WhiteningModel, topo: Topography,
              config: TrainConfig | None = None,
              init_filters: np.ndarray | None = None) -> BasisModel:
    """Train with the pooling radius forced to 0 (plain ICA baseline)."""
    flat = Topography(width=topo.width, height=topo.height, radius=0)
    return train(patches, whitening, flat, config, init_filters)


def save_basis(model: BasisModel, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    write_matrix(os.path.join(directory, FILTERS_FILE), model.filters)
    write_matrix(os.path.join(directory, BASIS_FILE), model.basis)
    meta = {
        "format_version": 1,
        "kind": model.kind,
        "epsilon": format_float(model.epsilon),
        "map_width": model.topo.width,
        "map_height": model.topo.height,
        "radius": model.topo.radius,
        "whitening_ref": model.whitening_ref,
        "seed": model.seed,
        "iterations": len(model.training_log),
    }
    identity = np.arange(model.topo.n_units)
    if not np.array_equal(model.topo.permutation, identity):
        meta["permutation"] = ",".join(str(int(p)) for p in model.topo.permutation)
    write_meta(os.path.join(directory, META_FILE), meta)
    with open(os.path.join(directory, LOG_FILE), "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f)
        writer.writerow(["iter", "objective", "step"])
        for record in model.training_log:
            writer.writerow([record.iteration, format_float(record.objective),
                             format_float(record.step)])


def load_basis(directory) -> BasisModel:
    meta = read_meta(os.path.join(directory, META_FILE))
    filters = read_matrix(os.path.join(directory, FILTERS_FILE))
    basis = read_matrix(os.path.join(directory, BASIS_FILE))
    kind = meta["kind"]
    if kind not in ("TICA", "ICA"):
        raise FormatError(f"{directory}: unknown model kind {kind!r}")
    permutation = None
    if "permutation" in meta:
        permutation = np.array([int(p) for p in meta["permutation"].split(",")], dtype=np.intp)
    topo = Topography(
        width=int(meta["map_width"]),
        height=int(meta["map_height"]),
        radius=int(meta["radius"]),
        permutation=permutation,
    )
    if filters.shape[0] != topo.n_units:
        raise FormatError(f"{directory}: {filters.shape[0]} filters for {topo.n_units} units")
    log = []
    log_path = os.path.join(directory, LOG_FILE)
    if os.path.exists(log_path):
        with open(log_path, newline="", encoding="ascii") as f:
            for row in list(csv.reader(f))[1:]:
                log.append(TrainingRecord(int(row[0]), float(row[1]), float(row[2]), float("nan")))
    return BasisModel(
        filters=filters,
        basis=basis,
        topo=topo,
        whitening_ref=meta["whitening_ref"],
        kind=kind,
        epsilon=float(meta["epsilon"]),
        seed=int(meta["seed"]),
        training_log=log,
    )


def check_model_pairing(model: BasisModel, whitening: WhiteningModel) -> None:
    """Raise unless the basis model was trained with this whitening model."""
    if model.whitening_ref != whitening.identity_hash():
        raise ModelMismatch("basis model was trained with a different whitening model")
