"""JSON exchange formats for matrices, witnesses, families and sequences.

Matrix format: {"dim": n, "re": [[...]], "im": [[...]]} with "im" optional
(zero when absent).  Multiplicities are serialised as decimal strings so
arbitrary-precision integers survive CSV/JSON consumers.
"""
from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .blocks import BlockRecord, DivergentFamily, weighted
from .errors import DomainError, NonFinite
from .hermitian import HermitianOperator
from .search import SeminormLowerBound
from .sequences import NotFound, SequenceWitness

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "witness_to_json",
    "family_to_json",
    "sequence_witness_to_json",
    "dump_json",
]


def matrix_to_json(op: HermitianOperator) -> dict:
    mat = op.matrix
    doc = {"dim": op.dim, "re": [[float(v) for v in row] for row in mat.real]}
    if np.iscomplexobj(mat):
        doc["im"] = [[float(v) for v in row] for row in mat.imag]
    return doc


def matrix_from_json(doc: dict) -> HermitianOperator:
    """Strict loader for external matrix data.

    Rejects non-finite entries and matrices that are visibly not Hermitian
    (asymmetry beyond 1e-8 relative); the constructor's exact symmetrisation
    is reserved for floating-point dust, not for repairing wrong data.
    """
    if not isinstance(doc, dict) or "dim" not in doc or "re" not in doc:
        raise DomainError("matrix JSON needs at least 'dim' and 're'")
    dim = int(doc["dim"])
    re = np.asarray(doc["re"], dtype=np.float64)
    if re.shape != (dim, dim):
        raise DomainError(f"'re' has shape {re.shape}, expected ({dim}, {dim})")
    if "im" in doc and doc["im"] is not None:
        im = np.asarray(doc["im"], dtype=np.float64)
        if im.shape != (dim, dim):
            raise DomainError(f"'im' has shape {im.shape}, expected ({dim}, {dim})")
        mat = re + 1j * im
    else:
        mat = re
    if not np.isfinite(mat).all():
        raise NonFinite("matrix entries must be finite")
    asym = np.abs(mat - mat.conj().T).max()
    if asym > 1e-8 * max(1.0, np.abs(mat).max()):
        raise DomainError(f"matrix is not Hermitian (asymmetry {asym:g})")
    return HermitianOperator(mat)


def witness_to_json(result: SeminormLowerBound, function_ref: dict) -> dict:
    doc = {
        "function": function_ref,
        "norm_kind": result.norm_kind,
        "value": result.value,
        "seed": result.seed,
        "budget": result.budget,
    }
    if result.witness is None:
        doc["degenerate"] = True
        doc["A"] = None
        doc["B"] = None
    else:
        doc["A"] = matrix_to_json(result.witness.a)
        doc["B"] = matrix_to_json(result.witness.b)
    return doc


def _record_to_json(rec: BlockRecord) -> dict:
    doc = {
        "n": rec.index,
        "delta": rec.delta,
        "target_ratio": rec.target_ratio,
        "achieved_ratio": rec.achieved_ratio,
        "status": rec.status,
    }
    if rec.block is None:
        doc.update({"multiplicity": "0", "increment_s1": 0.0, "A": None, "B": None})
    else:
        doc.update({
            "multiplicity": str(rec.block.multiplicity),
            "increment_s1": weighted(rec.block.multiplicity, rec.block.increment_s1),
            "A": matrix_to_json(rec.block.a),
            "B": matrix_to_json(rec.block.b),
        })
    return doc


def family_to_json(family: DivergentFamily) -> list:
    return [_record_to_json(rec) for rec in family.all_records]


def sequence_witness_to_json(witness, function_ref: dict, levels: int) -> dict:
    doc = {"function": function_ref, "K": levels, "t": [], "s": [], "n": []}
    if isinstance(witness, NotFound):
        doc["status"] = "not_found"
        doc["failed_level"] = witness.level
        doc["best_quotient"] = witness.best_quotient
        return doc
    assert isinstance(witness, SequenceWitness)
    doc["t"] = list(witness.t)
    doc["s"] = list(witness.s)
    doc["n"] = [str(m) for m in witness.n] if witness.n is not None else []
    doc["status"] = "ok"
    return doc


def dump_json(doc, path: Optional[str] = None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
