"""3D torus coordinates and port wiring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, Sequence, Tuple

from ..wire import Direction


class BadDims(ValueError):
    pass


@dataclass(frozen=True, order=True)
class TorusCoord:
    x: int
    y: int
    z: int

    def __str__(self) -> str:
        return f"{self.x}.{self.y}.{self.z}"

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.x, self.y, self.z)

    @classmethod
    def parse(cls, value) -> "TorusCoord":
        if isinstance(value, TorusCoord):
            return value
        if isinstance(value, str):
            parts = value.replace(",", ".").split(".")
        else:
            parts = list(value)
        if len(parts) != 3:
            raise ValueError(f"coordinate needs three components: {value!r}")
        return cls(*(int(p) for p in parts))


Port = Tuple[TorusCoord, Direction]


class Torus:
    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise BadDims(f"dims must be three integers >= 1, got {dims!r}")
        self.dims = dims

    def __len__(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def __contains__(self, c: TorusCoord) -> bool:
        return all(0 <= v < n for v, n in zip(c.as_tuple(), self.dims))

    def nodes(self) -> Iterator[TorusCoord]:
        nx, ny, nz = self.dims
        for z in range(nz):
            for y in range(ny):
                for x in range(nx):
                    yield TorusCoord(x, y, z)

    def neighbour(self, c: TorusCoord, d: Direction) -> TorusCoord:
        v = list(c.as_tuple())
        v[d.axis] = (v[d.axis] + d.sign) % self.dims[d.axis]
        return TorusCoord(*v)

    def neighbours(self, c: TorusCoord) -> Dict[Direction, TorusCoord]:
        return {d: self.neighbour(c, d) for d in Direction}

    def peer_port(self, c: TorusCoord, d: Direction) -> Port:
        """The port at the far end of the cable leaving ``c`` through ``d``."""
        return self.neighbour(c, d), d.opposite

    def cable_key(self, c: TorusCoord, d: Direction) -> Tuple[Port, Port]:
        a, b = (c, d), self.peer_port(c, d)
        return (a, b) if (a[0], a[1].label) <= (b[0], b[1].label) else (b, a)


def build_torus(dims: Sequence[int]) -> Torus:
    return Torus(dims)
