"""Path and cycle certificates plus an independent validator.

The validator deliberately shares no logic with the search code: adjacency,
distinctness, coverage and forced-edge containment are all rechecked from
the raw vertex sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .cube import Matching, Vertex


class CertificateError(ValueError):
    """A certificate failed validation."""


@dataclass(frozen=True)
class PathCertificate:
    """An explicit Hamilton path: an ordered vertex sequence."""

    dim: int
    vertices: tuple[Vertex, ...]

    @classmethod
    def from_bits(cls, dim: int, bits: Iterable[int]) -> "PathCertificate":
        return cls(dim, tuple(Vertex(dim, b) for b in bits))

    def bits(self) -> list[int]:
        return [v.bits for v in self.vertices]

    def edge_pairs(self) -> set[frozenset[int]]:
        b = self.bits()
        return {frozenset(p) for p in zip(b, b[1:])}

    def reversed(self) -> "PathCertificate":
        return PathCertificate(self.dim, tuple(reversed(self.vertices)))

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "path",
            "dim": self.dim,
            "vertices": [str(v) for v in self.vertices],
        }


@dataclass(frozen=True)
class CycleCertificate:
    """An explicit Hamilton cycle; the closing edge is implicit."""

    dim: int
    vertices: tuple[Vertex, ...]

    @classmethod
    def from_bits(cls, dim: int, bits: Iterable[int]) -> "CycleCertificate":
        return cls(dim, tuple(Vertex(dim, b) for b in bits))

    def bits(self) -> list[int]:
        return [v.bits for v in self.vertices]

    def edge_pairs(self) -> set[frozenset[int]]:
        b = self.bits()
        pairs = {frozenset(p) for p in zip(b, b[1:])}
        pairs.add(frozenset((b[-1], b[0])))
        return pairs

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "cycle",
            "dim": self.dim,
            "vertices": [str(v) for v in self.vertices],
        }


def certificate_from_dict(data: dict) -> PathCertificate | CycleCertificate:
    kind = data.get("kind")
    dim = data.get("dim")
    verts = data.get("vertices")
    if kind not in ("path", "cycle") or not isinstance(dim, int) or not isinstance(verts, list):
        raise CertificateError("malformed certificate object")
    bits = []
    for s in verts:
        if not isinstance(s, str) or len(s) != dim or set(s) - {"0", "1"}:
            raise CertificateError(f"{s!r} is not a {dim}-bit vertex string")
        bits.append(int(s, 2))
    cls = PathCertificate if kind == "path" else CycleCertificate
    return cls.from_bits(dim, bits)


def _check_sequence(
    dim: int,
    bits: list[int],
    removed: frozenset[int],
) -> None:
    expected = (1 << dim) - len(removed)
    if len(bits) != expected:
        raise CertificateError(f"covers {len(bits)} vertices, expected {expected}")
    if len(set(bits)) != len(bits):
        raise CertificateError("repeated vertex")
    for b in bits:
        if not 0 <= b < (1 << dim):
            raise CertificateError(f"vertex {b} out of range for Q_{dim}")
        if b in removed:
            raise CertificateError(f"visits removed vertex {b:0{dim}b}")
    for a, b in zip(bits, bits[1:]):
        if (a ^ b).bit_count() != 1:
            raise CertificateError(f"{a:0{dim}b} and {b:0{dim}b} are not adjacent")


def _check_forced(dim: int, edge_pairs: set[frozenset[int]], forced: Optional[Matching]) -> None:
    if forced is None:
        return
    for e in forced.edges:
        a, b = e.endpoint_bits()
        if frozenset((a, b)) not in edge_pairs:
            raise CertificateError(f"forced edge {a:0{dim}b}-{b:0{dim}b} not used")


def validate_path(
    cert: PathCertificate,
    forced: Optional[Matching] = None,
    u: Optional[Vertex] = None,
    v: Optional[Vertex] = None,
    removed: Iterable[Vertex] = (),
) -> None:
    """Raise :class:`CertificateError` unless the certificate is a Hamilton
    path of Q_dim minus ``removed`` with the stated endpoints containing
    every forced edge."""
    removed_bits = frozenset(r.bits for r in removed)
    bits = cert.bits()
    if not bits:
        raise CertificateError("empty certificate")
    _check_sequence(cert.dim, bits, removed_bits)
    if u is not None and bits[0] != u.bits:
        raise CertificateError(f"starts at {bits[0]:0{cert.dim}b}, expected {u}")
    if v is not None and bits[-1] != v.bits:
        raise CertificateError(f"ends at {bits[-1]:0{cert.dim}b}, expected {v}")
    _check_forced(cert.dim, cert.edge_pairs(), forced)


def validate_cycle(cert: CycleCertificate, forced: Optional[Matching] = None) -> None:
    """Raise :class:`CertificateError` unless the certificate is a Hamilton
    cycle of Q_dim containing every forced edge."""
    bits = cert.bits()
    if len(bits) < 3:
        raise CertificateError("a cycle needs at least three vertices")
    _check_sequence(cert.dim, bits, frozenset())
    if (bits[0] ^ bits[-1]).bit_count() != 1:
        raise CertificateError("closing edge endpoints are not adjacent")
    _check_forced(cert.dim, cert.edge_pairs(), forced)
