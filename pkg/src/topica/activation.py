"""Applying a trained model to frame sequences.

Activation of unit i on a patch x is its whitened-space filter response
s_i = w_i . (V x); the unit's energy is s_i^2. A trace holds one row per
frame, in frame order, so downstream temporal analyses can treat columns
as per-unit time series.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import BadPermutation, DimensionMismatch
from .estimation import BasisModel, check_model_pairing
from .images import PatchSet
from .matrixio import format_float, read_matrix, read_meta, write_matrix, write_meta
from .whitening import WhiteningModel, whiten

ACTIVATIONS_FILE = "activations.ticm"
ENERGIES_FILE = "energies.ticm"
META_FILE = "trace.meta"


@dataclass(eq=False)
class ActivationTrace:
    activations: np.ndarray      # (n_frames, n_units)
    energies: np.ndarray         # activations squared, elementwise
    frame_rate: float
    model_ref: str
    whitening_ref: str

    def __post_init__(self):
        self.activations = np.asarray(self.activations, dtype=np.float64)
        self.energies = np.asarray(self.energies, dtype=np.float64)
        if self.activations.shape != self.energies.shape:
            raise DimensionMismatch(
                f"activations {self.activations.shape} vs energies {self.energies.shape}"
            )
        if self.activations.ndim != 2:
            raise DimensionMismatch(f"trace must be 2-D, got shape {self.activations.shape}")

    @property
    def n_frames(self) -> int:
        return self.activations.shape[0]

    @property
    def n_units(self) -> int:
        return self.activations.shape[1]


def compute_activation(model: BasisModel, whitening: WhiteningModel,
                       patches: PatchSet, frame_rate: float = 24.0) -> ActivationTrace:
    """Filter responses and energies of each patch row, in order."""
    check_model_pairing(model, whitening)
    z = whiten(whitening, patches)
    activations = z @ model.filters.T
    return ActivationTrace(
        activations=activations,
        energies=activations * activations,
        frame_rate=frame_rate,
        model_ref=model.identity_hash(),
        whitening_ref=whitening.identity_hash(),
    )


def reconstruct(model: BasisModel, trace: ActivationTrace) -> PatchSet:
    """Patch reconstructions A s from the trace's activations.

    Reconstructions live in the k-dimensional retained subspace, so they
    match the original patches only up to the discarded components.
    """
    if trace.model_ref != model.identity_hash():
        from .errors import ModelMismatch
        raise ModelMismatch("trace was computed from a different basis model")
    data = trace.activations @ model.basis.T
    return PatchSet(data=data, patch_side=model.patch_side, source_tag="reconstruction",
                    per_patch_mean_removed=False)


def shuffle_frames(trace: ActivationTrace, seed: int) -> ActivationTrace:
    """Seeded random permutation of the frame axis (temporal control)."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(trace.n_frames)
    return ActivationTrace(
        activations=trace.activations[order],
        energies=trace.energies[order],
        frame_rate=trace.frame_rate,
        model_ref=trace.model_ref,
        whitening_ref=trace.whitening_ref,
    )


def relabel_trace(trace: ActivationTrace, permutation: np.ndarray) -> ActivationTrace:
    """Reorder unit columns: new column i is old column permutation[i]."""
    perm = np.asarray(permutation, dtype=np.intp)
    if perm.shape != (trace.n_units,) or not np.array_equal(np.sort(perm),
                                                            np.arange(trace.n_units)):
        raise BadPermutation(f"not a permutation of 0..{trace.n_units - 1}")
    return ActivationTrace(
        activations=trace.activations[:, perm],
        energies=trace.energies[:, perm],
        frame_rate=trace.frame_rate,
        model_ref=trace.model_ref,
        whitening_ref=trace.whitening_ref,
    )


def save_trace(trace: ActivationTrace, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    write_matrix(os.path.join(directory, ACTIVATIONS_FILE), trace.activations)
    write_matrix(os.path.join(directory, ENERGIES_FILE), trace.energies)
    write_meta(os.path.join(directory, META_FILE), {
        "format_version": 1,
        "frame_rate": format_float(trace.frame_rate),
        "model_ref": trace.model_ref,
        "whitening_ref": trace.whitening_ref,
    })


def load_trace(directory) -> ActivationTrace:
    meta = read_meta(os.path.join(directory, META_FILE))
    return ActivationTrace(
        activations=read_matrix(os.path.join(directory, ACTIVATIONS_FILE)),
        energies=read_matrix(os.path.join(directory, ENERGIES_FILE)),
        frame_rate=float(meta["frame_rate"]),
        model_ref=meta["model_ref"],
        whitening_ref=meta["whitening_ref"],
    )


def export_trace_csv(trace: ActivationTrace, path, use_energy: bool = False) -> None:
    """One row per frame: frame index then one column per unit."""
    values = trace.energies if use_energy else trace.activations
    with open(path, "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f)
        writer.writerow(["frame"] + [f"unit_{i}" for i in range(trace.n_units)])
        for t in range(trace.n_frames):
            writer.writerow([t] + [format_float(v) for v in values[t]])
