"""JSON state files.

A state file stores a dense matrix over a side-major factor order: the first
``cut`` factors belong to Alice, the rest to Bob, so a single integer fixes the
bipartition for every downstream measure. Library constructors interleave
Alice and Bob shield factors; writers permute into side-major order and record
enough of the generating recipe (the ``spec`` block) to rebuild twistings.
"""
from __future__ import annotations

import dataclasses
import json
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .operators import (
    Bipartition,
    DensityOperator,
    TensorOperator,
    ValidationError,
    permute_subsystems,
)
from .states import MultipartiteSpec, PrivateStateSpec

STATE_FORMAT = "privstate-state-v1"


def _matrix_to_pairs(mat: np.ndarray) -> list[list[float]]:
    flat = np.asarray(mat, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _pairs_to_matrix(pairs: Sequence[Sequence[float]], dim: int) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.shape != (dim * dim, 2):
        raise ValidationError(f"data length {arr.shape[0]} does not match dim {dim}^2")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)


def spec_to_json(spec: PrivateStateSpec | MultipartiteSpec) -> dict:
    out = {
        "d": spec.d,
        "shield_dims": list(spec.shield_dims),
        "sigma": _matrix_to_pairs(spec.sigma.mat),
        "unitaries": [_matrix_to_pairs(u.mat) for u in spec.unitaries],
    }
    if isinstance(spec, MultipartiteSpec):
        out["n_bobs"] = spec.n_bobs
    else:
        out["n_alice_shield"] = spec.n_alice_shield
    return out


def spec_from_json(obj: dict) -> PrivateStateSpec | MultipartiteSpec:
    d = int(obj["d"])
    shield_dims = tuple(int(x) for x in obj["shield_dims"])
    s = int(np.prod(shield_dims)) if shield_dims else 1
    sigma = DensityOperator(shield_dims, _pairs_to_matrix(obj["sigma"], s))
    us = tuple(TensorOperator(shield_dims, _pairs_to_matrix(u, s)) for u in obj["unitaries"])
    if "n_bobs" in obj:
        return MultipartiteSpec(d, int(obj["n_bobs"]), shield_dims, sigma, us)
    return PrivateStateSpec(d, shield_dims, sigma, us, int(obj["n_alice_shield"]))


@dataclasses.dataclass(frozen=True)
class StateFile:
    """In-memory form of a serialized operator; dims are side-major."""

    dims: tuple[int, ...]
    cut: int
    mat: np.ndarray
    kind: str = "density"  # "density" or "unitary"
    builder: dict | None = None
    spec: dict | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("density", "unitary"):
            raise ValidationError(f"unknown state-file kind {self.kind!r}")
        if not 0 <= self.cut <= len(self.dims):
            raise ValidationError("cut out of range")
        op = TensorOperator(self.dims, self.mat)  # shape check
        object.__setattr__(self, "dims", op.dims)
        object.__setattr__(self, "mat", op.mat)
        if self.kind == "density":
            DensityOperator(self.dims, self.mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def density(self) -> DensityOperator:
        if self.kind != "density":
            raise ValidationError(f"state file holds a {self.kind}, not a density operator")
        return DensityOperator(self.dims, self.mat)

    def operator(self) -> TensorOperator:
        return TensorOperator(self.dims, self.mat)

    def bipartition(self) -> Bipartition:
        return Bipartition.first_k(len(self.dims), self.cut)

    def private_spec(self) -> PrivateStateSpec | MultipartiteSpec:
        if self.spec is None:
            raise ValidationError("state file carries no construction spec")
        return spec_from_json(self.spec)


def side_major(
    op: DensityOperator | TensorOperator, cut: Bipartition
) -> tuple[tuple[int, ...], int, np.ndarray]:
    """Permute factors to (Alice..., Bob...) order; returns (dims, cut index, matrix)."""
    cut.validate(len(op.dims))
    perm = list(cut.left) + list(cut.right)
    out = permute_subsystems(op, perm)
    return out.dims, len(cut.left), out.mat


def from_side_major(sf: StateFile, cut: Bipartition) -> TensorOperator:
    """Undo side_major: rebuild the library factor order described by ``cut``."""
    perm = list(cut.left) + list(cut.right)
    inverse = [0] * len(perm)
    for slot, src in enumerate(perm):
        inverse[src] = slot
    return permute_subsystems(sf.operator(), inverse)


def state_file_of(
    op: DensityOperator | TensorOperator,
    cut: Bipartition,
    kind: str = "density",
    builder: dict | None = None,
    spec: PrivateStateSpec | MultipartiteSpec | None = None,
) -> StateFile:
    dims, k, mat = side_major(op, cut)
    return StateFile(
        dims,
        k,
        mat,
        kind=kind,
        builder=builder,
        spec=None if spec is None else spec_to_json(spec),
    )


def dumps(sf: StateFile) -> str:
    obj = {
        "format": STATE_FORMAT,
        "kind": sf.kind,
        "dims": list(sf.dims),
        "cut": sf.cut,
        "data": _matrix_to_pairs(sf.mat),
    }
    if sf.builder is not None:
        obj["builder"] = sf.builder
    if sf.spec is not None:
        obj["spec"] = sf.spec
    return json.dumps(obj, sort_keys=True) + "\n"


def loads(text: str) -> StateFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not a JSON state file: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("format") != STATE_FORMAT:
        raise ValidationError(f"missing or unknown format tag (expected {STATE_FORMAT})")
    dims = tuple(int(x) for x in obj["dims"])
    dim = int(np.prod(dims)) if dims else 1
    return StateFile(
        dims,
        int(obj["cut"]),
        _pairs_to_matrix(obj["data"], dim),
        kind=obj.get("kind", "density"),
        builder=obj.get("builder"),
        spec=obj.get("spec"),
    )


def save(path: str | Path, sf: StateFile) -> None:
    Path(path).write_text(dumps(sf), encoding="utf-8", newline="\n")


def load(path: str | Path) -> StateFile:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"no such state file: {p}")
    return loads(p.read_text(encoding="utf-8"))
