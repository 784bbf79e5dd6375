"""Geometry and indexing for the L x L periodic square lattice.

Qubits live on the links of the lattice.  A link is addressed either by
(x, y, orientation) with orientation 0 = horizontal, 1 = vertical, or by a
flat link id

    link_id = 2 * (y * L + x) + orientation

so that horizontal/vertical strides are computable without table lookups.
Horizontal link (x, y) joins vertex (x, y) to (x+1, y); vertical link (x, y)
joins (x, y) to (x, y+1).  All coordinates wrap mod L.

Plaquette p = (x, y) is bounded by links (bottom, right, top, left);
star v = (x, y) collects the four links meeting at the vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

HORIZONTAL = 0
VERTICAL = 1


@dataclass(frozen=True)
class TorusLattice:
    """Immutable link/plaquette/star index tables for a periodic L x L lattice."""

    L: int
    num_links: int
    plaquettes: tuple[tuple[int, int, int, int], ...]  # p -> (bottom, right, top, left)
    stars: tuple[tuple[int, int, int, int], ...]       # v -> (east, north, west, south)

    @property
    def num_plaquettes(self) -> int:
        return self.L * self.L

    @property
    def num_stars(self) -> int:
        return self.L * self.L

    def link_id(self, x: int, y: int, orientation: int) -> int:
        if orientation not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"orientation must be 0 or 1, got {orientation}")
        L = self.L
        return 2 * ((y % L) * L + (x % L)) + orientation

    def h_link(self, x: int, y: int) -> int:
        """Horizontal link from (x, y) to (x+1, y)."""
        return self.link_id(x, y, HORIZONTAL)

    def v_link(self, x: int, y: int) -> int:
        """Vertical link from (x, y) to (x, y+1)."""
        return self.link_id(x, y, VERTICAL)

    def plaquette_id(self, x: int, y: int) -> int:
        L = self.L
        return (y % L) * L + (x % L)

    def plaquette_links(self, x: int, y: int) -> tuple[int, int, int, int]:
        return self.plaquettes[self.plaquette_id(x, y)]

    def star_links(self, x: int, y: int) -> tuple[int, int, int, int]:
        return self.stars[self.plaquette_id(x, y)]


@dataclass(frozen=True)
class LoopSpec:
    """A resolved closed loop of links (contractible rectangle or winding line).

    For rectangles, ``interior`` lists the ids of the enclosed plaquettes
    (used by the dual-model Wilson mapping).
    """

    kind: str  # "rectangle" | "noncontractible"
    links: tuple[int, ...]
    interior: tuple[int, ...] = ()
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.links)


def build_lattice(L: int) -> TorusLattice:
    """Build the index tables for an L x L torus (L >= 2).

    A 1 x 1 torus is rejected: its plaquette and star would repeat links,
    breaking the even-overlap property that makes stars and plaquettes commute.
    """
    if L < 2:
        raise ValueError(f"lattice size must be >= 2, got {L}")

    def h(x: int, y: int) -> int:
        return 2 * ((y % L) * L + (x % L))

    def v(x: int, y: int) -> int:
        return 2 * ((y % L) * L + (x % L)) + 1

    plaquettes = []
    stars = []
    for y in range(L):
        for x in range(L):
            plaquettes.append((h(x, y), v(x + 1, y), h(x, y + 1), v(x, y)))
            stars.append((h(x, y), v(x, y), h(x - 1, y), v(x, y - 1)))

    return TorusLattice(
        L=L,
        num_links=2 * L * L,
        plaquettes=tuple(plaquettes),
        stars=tuple(stars),
    )


def wilson_rectangle(lat: TorusLattice, x0: int, y0: int, lx: int, ly: int) -> LoopSpec:
    """Closed rectangular path of size lx x ly anchored at vertex (x0, y0).

    Requires 1 <= lx, ly < L so the rectangle is contractible; a side of
    length L would wind around the torus.  The returned loop lists the
    2*(lx+ly) boundary links and the lx*ly enclosed plaquette ids.
    """
    L = lat.L
    if not (1 <= lx < L and 1 <= ly < L):
        raise ValueError(
            f"rectangle sides must satisfy 1 <= lx, ly < L={L}, got ({lx}, {ly})"
        )
    links = []
    for i in range(lx):
        links.append(lat.h_link(x0 + i, y0))        # bottom
    for j in range(ly):
        links.append(lat.v_link(x0 + lx, y0 + j))   # right
    for i in range(lx):
        links.append(lat.h_link(x0 + i, y0 + ly))   # top
    for j in range(ly):
        links.append(lat.v_link(x0, y0 + j))        # left
    interior = tuple(
        lat.plaquette_id(x0 + i, y0 + j) for j in range(ly) for i in range(lx)
    )
    return LoopSpec(
        kind="rectangle",
        links=tuple(links),
        interior=interior,
        params={"x0": x0 % L, "y0": y0 % L, "lx": lx, "ly": ly},
    )


def noncontractible_loop(
    lat: TorusLattice, operator: str, direction: str, offset: int = 0
) -> LoopSpec:
    """One of the four winding loops on the torus.

    operator "wilson": L links lying on a straight line of the direct lattice
    (a horizontal loop uses the horizontal links of row ``offset``).
    operator "thooft": L links crossed orthogonally by a straight line of the
    dual lattice (a horizontal dual line crosses the vertical links of row
    ``offset``; a vertical dual line crosses the horizontal links of column
    ``offset``).
    """
    L = lat.L
    if operator not in ("wilson", "thooft"):
        raise ValueError(f"operator must be 'wilson' or 'thooft', got {operator!r}")
    if direction not in ("h", "v"):
        raise ValueError(f"direction must be 'h' or 'v', got {direction!r}")
    if not (0 <= offset < L):
        raise ValueError(f"offset must be in [0, {L}), got {offset}")

    if operator == "wilson":
        if direction == "h":
            links = tuple(lat.h_link(x, offset) for x in range(L))
        else:
            links = tuple(lat.v_link(offset, y) for y in range(L))
    else:
        if direction == "h":
            links = tuple(lat.v_link(x, offset) for x in range(L))
        else:
            links = tuple(lat.h_link(offset, y) for y in range(L))

    return LoopSpec(
        kind="noncontractible",
        links=links,
        params={"operator": operator, "direction": direction, "offset": offset},
    )
