"""Certificate bundles, convention hashing and small shared helpers."""

from __future__ import annotations

import hashlib
import json
import multiprocessing
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .scalars import MUL_TABLE, rat_str, table_hash

SCHEMA_VERSION = 1


@dataclass
class CertBundle:
    """Outcome of one suite.

    ``claims`` maps a claim name to {"expected", "observed", "ok"}; the
    suite passes iff every claim is ok.  ``data`` holds whatever a
    re-verification needs (samples, witnesses, recorded minors) and
    ``timing`` is the only field allowed to differ between identical runs.
    """

    suite: str
    target: str
    params: dict = field(default_factory=dict)
    claims: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def claim(self, name: str, expected: Any, observed: Any, ok: bool | None = None) -> bool:
        if ok is None:
            ok = expected == observed
        self.claims[name] = {"expected": _plain(expected), "observed": _plain(observed), "ok": bool(ok)}
        return bool(ok)

    @property
    def passed(self) -> bool:
        return bool(self.claims) and all(c["ok"] for c in self.claims.values())

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def failures(self) -> list[str]:
        return [k for k, c in self.claims.items() if not c["ok"]]

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "target": self.target,
            "status": self.status,
            "params": self.params,
            "claims": self.claims,
            "data": self.data,
            "notes": self.notes,
            "timing": self.timing,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CertBundle":
        return cls(
            suite=obj["suite"],
            target=obj["target"],
            params=obj.get("params", {}),
            claims=obj.get("claims", {}),
            data=obj.get("data", {}),
            notes=obj.get("notes", []),
            timing=obj.get("timing", {}),
        )


def _plain(v):
    """Exact rationals become strings so claims stay JSON-serialisable."""
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else rat_str(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def conventions(n: int | None = None) -> dict:
    """Everything an independent implementation must agree on to compare reports."""
    from . import hpn, op2

    out = {
        "octonion_table": [[list(e) for e in row] for row in MUL_TABLE],
        "octonion_table_sha256": table_hash(),
        "quaternion_labels": list(hpn.QUAT_LABELS),
        "J3": "J1 J2 (blockwise right multiplication by -k)",
        "sym2_order": "pairs a <= b, lexicographic",
        "h3o_coords": "r1, r2, r3, x1[0:8], x2[0:8], x3[0:8]; matrix [[r1, x3*, x2*], [x3, r2, x1], [x2, x1*, r3]]",
        "h3o_gram": list(op2.GRAM),
        "det3": "r1 r2 r3 + 2 Re((x1 x2) x3*) - r1|x1|^2 - r2|x2|^2 - r3|x3|^2",
        "traceless_basis": "(1,-1,0), (0,1,-1), then octonion coordinates 3..26",
    }
    if n is not None:
        out["v_basis"] = [idx.label() for idx in hpn.v_basis_indices(n)]
    return out


def convention_hash(n: int | None = None) -> str:
    return digest(conventions(n))


def digest(obj: Any) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def sample_seed(seed: int, i: int) -> int:
    """Per-sample RNG seed; sample i never depends on how many samples are drawn."""
    return seed * 1_000_003 + i


def int_strs(v: Iterable[int]) -> list[str]:
    return [str(int(x)) for x in v]


def sparse_json(w: dict) -> dict:
    return {"index": [int(i) for i in w], "value": int_strs(w.values())}


def sparse_from_json(obj: dict) -> dict:
    return {int(i): int(v) for i, v in zip(obj["index"], obj["value"])}


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map, optionally over a process pool."""
    if jobs <= 1 or len(items) < 2 * jobs:
        return [fn(x) for x in items]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(jobs) as pool:
        return pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs)))
