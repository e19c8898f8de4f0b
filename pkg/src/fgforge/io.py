"""Coefficient files: self-describing JSON with bit-exact float payloads.

Layout::

    {"format": "fgforge-coefficients", "version": 1,
     "grid": {"n_points": N}, "order": K, "signature": 1,
     "metadata": {...},
     "coefficients": [{"order": k, "sup_norm": ..., "components": {"11": hex, ...},
                       "modes": {"11": [...], ...}}, ...]}

Each component is the little-endian float64 byte string of the (N, N, N)
array in C order, written as lowercase hex.  The mode summary is for humans
and is ignored on read.
"""

from __future__ import annotations

import json

import numpy as np

from .expansion import FGExpansion
from .field import SYM_LABELS, GridSpec, SymForm, leading_modes

FORMAT = "fgforge-coefficients"
VERSION = 1
MODE_COUNT = 4


class CoefficientFileError(ValueError):
    pass


def encode_array(a: np.ndarray) -> str:
    return np.ascontiguousarray(a, dtype="<f8").tobytes().hex()


def decode_array(text: str, shape) -> np.ndarray:
    try:
        raw = bytes.fromhex(text)
    except (TypeError, ValueError) as exc:
        raise CoefficientFileError(f"bad hex payload: {exc}") from None
    n = int(np.prod(shape))
    if len(raw) != 8 * n:
        raise CoefficientFileError(f"payload has {len(raw)} bytes, expected {8 * n}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(float)


def expansion_document(exp: FGExpansion, metadata: dict | None = None) -> dict:
    coeffs = []
    for k, c in enumerate(exp.coeffs):
        coeffs.append({
            "order": k,
            "sup_norm": c.sup_norm(),
            "components": {lab: encode_array(c.comps[i]) for i, lab in enumerate(SYM_LABELS)},
            "modes": {lab: leading_modes(c.comps[i], MODE_COUNT)
                      for i, lab in enumerate(SYM_LABELS)},
        })
    return {
        "format": FORMAT,
        "version": VERSION,
        "grid": {"n_points": exp.grid.n_points},
        "order": exp.order,
        "signature": exp.signature,
        "metadata": metadata or {},
        "coefficients": coeffs,
    }


def dumps(exp: FGExpansion, metadata: dict | None = None) -> str:
    return json.dumps(expansion_document(exp, metadata), indent=1, sort_keys=True) + "\n"


def write_coefficients(path, exp: FGExpansion, metadata: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(exp, metadata))


def loads(text: str) -> tuple[FGExpansion, dict]:
    """Parse a coefficient file; returns the expansion and its metadata."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CoefficientFileError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CoefficientFileError("not an fgforge coefficient file")
    if doc.get("version") != VERSION:
        raise CoefficientFileError(f"unsupported version {doc.get('version')!r}")
    try:
        grid = GridSpec(int(doc["grid"]["n_points"]))
        order = int(doc["order"])
        signature = int(doc["signature"])
        entries = sorted(doc["coefficients"], key=lambda e: e["order"])
        if [e["order"] for e in entries] != list(range(order + 1)):
            raise CoefficientFileError("coefficient orders are not 0..K")
        forms = []
        for e in entries:
            comps = np.stack([decode_array(e["components"][lab], grid.shape)
                              for lab in SYM_LABELS])
            forms.append(SymForm(grid, comps))
    except CoefficientFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CoefficientFileError(f"malformed coefficient file: {exc!r}") from None
    if signature not in (1, -1):
        raise CoefficientFileError(f"bad signature {signature}")
    return FGExpansion(forms, signature, {}), doc.get("metadata", {})


def read_coefficients(path) -> tuple[FGExpansion, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CoefficientFileError(f"cannot read {path}: {exc}") from None
    return loads(text)
