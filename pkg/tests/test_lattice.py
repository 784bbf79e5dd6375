"""Geometry invariants of the torus lattice and its loops."""

from __future__ import annotations

from collections import Counter

import pytest

from z2qaoa.lattice import build_lattice, noncontractible_loop, wilson_rectangle


def link_mask(links) -> int:
    m = 0
    for l in links:
        m ^= 1 << l
    return m


@pytest.mark.parametrize("L", [2, 3, 4, 5])
def test_tables_cover_each_link_twice(L):
    lat = build_lattice(L)
    assert lat.num_links == 2 * L * L
    assert len(lat.plaquettes) == L * L
    assert len(lat.stars) == L * L
    plaq_count = Counter(q for p in lat.plaquettes for q in p)
    star_count = Counter(q for s in lat.stars for q in s)
    assert set(plaq_count) == set(range(lat.num_links))
    assert all(c == 2 for c in plaq_count.values())
    assert all(c == 2 for c in star_count.values())


def test_counts_at_small_sizes():
    lat = build_lattice(3)
    assert (lat.num_links, len(lat.plaquettes), len(lat.stars)) == (18, 9, 9)
    lat2 = build_lattice(2)
    assert lat2.num_links == 8
    # on the 2x2 torus horizontally adjacent plaquettes share both vertical links
    shared = set(lat2.plaquettes[0]) & set(lat2.plaquettes[1])
    assert len(shared) == 2


def test_reject_degenerate_size():
    with pytest.raises(ValueError):
        build_lattice(1)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_star_plaquette_even_overlap(L):
    lat = build_lattice(L)
    for p in lat.plaquettes:
        for s in lat.stars:
            assert len(set(p) & set(s)) in (0, 2)


def test_link_id_convention():
    lat = build_lattice(3)
    # link id = 2*(y*L + x) + orientation, hand-checked entries
    assert lat.h_link(0, 0) == 0
    assert lat.v_link(0, 0) == 1
    assert lat.h_link(2, 1) == 2 * (1 * 3 + 2)
    assert lat.v_link(1, 2) == 2 * (2 * 3 + 1) + 1
    assert lat.h_link(3, 0) == lat.h_link(0, 0)  # wraps


def test_rectangle_basic_counts():
    lat = build_lattice(5)
    r11 = wilson_rectangle(lat, 0, 0, 1, 1)
    assert sorted(r11.links) == sorted(lat.plaquettes[0])
    assert r11.interior == (0,)
    r22 = wilson_rectangle(lat, 1, 1, 2, 2)
    assert len(r22.links) == 8 and len(r22.interior) == 4
    r33 = wilson_rectangle(lat, 0, 0, 3, 3)
    assert len(r33.links) == 12 and len(r33.interior) == 9


def test_rectangle_closed_path_even_vertex_degree():
    lat = build_lattice(5)
    loop = wilson_rectangle(lat, 2, 3, 3, 2)
    degree: Counter = Counter()
    for l in loop.links:
        cell, orient = divmod(l, 2)
        y, x = divmod(cell, lat.L)
        if orient == 0:
            degree[(x, y)] += 1
            degree[((x + 1) % lat.L, y)] += 1
        else:
            degree[(x, y)] += 1
            degree[(x, (y + 1) % lat.L)] += 1
    assert all(d % 2 == 0 for d in degree.values())


@pytest.mark.parametrize("L,lx,ly", [(3, 3, 1), (3, 1, 3), (4, 5, 1)])
def test_rectangle_rejects_winding_sides(L, lx, ly):
    lat = build_lattice(L)
    with pytest.raises(ValueError):
        wilson_rectangle(lat, 0, 0, lx, ly)


@pytest.mark.parametrize("L", [3, 4, 5])
def test_rectangle_is_boundary_of_interior(L):
    lat = build_lattice(L)
    for (x0, y0, lx, ly) in [(0, 0, 1, 1), (1, 2, 2, 1), (2, 2, 2, 2)]:
        loop = wilson_rectangle(lat, x0, y0, lx, ly)
        interior_xor = 0
        for p in loop.interior:
            interior_xor ^= link_mask(lat.plaquettes[p])
        assert interior_xor == link_mask(loop.links)


def test_noncontractible_geometry():
    lat = build_lattice(3)
    wh = noncontractible_loop(lat, "wilson", "h", 0)
    assert sorted(wh.links) == sorted(lat.h_link(x, 0) for x in range(3))
    tv = noncontractible_loop(lat, "thooft", "v", 0)
    assert sorted(tv.links) == sorted(lat.h_link(0, y) for y in range(3))
    th = noncontractible_loop(lat, "thooft", "h", 1)
    assert sorted(th.links) == sorted(lat.v_link(x, 1) for x in range(3))
    with pytest.raises(ValueError):
        noncontractible_loop(lat, "wilson", "h", 3)
    with pytest.raises(ValueError):
        noncontractible_loop(lat, "loopy", "h", 0)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_wilson_thooft_single_crossing(L):
    """A winding Wilson line and the transverse 't Hooft line always share
    exactly one link, which is what makes them anticommute."""
    lat = build_lattice(L)
    for o1 in range(L):
        for o2 in range(L):
            wh = noncontractible_loop(lat, "wilson", "h", o1)
            tv = noncontractible_loop(lat, "thooft", "v", o2)
            assert len(set(wh.links) & set(tv.links)) == 1
            wv = noncontractible_loop(lat, "wilson", "v", o1)
            th = noncontractible_loop(lat, "thooft", "h", o2)
            assert len(set(wv.links) & set(th.links)) == 1
            # parallel pairs never intersect
            assert not set(wh.links) & set(th.links)


@pytest.mark.parametrize("L", [3, 4])
def test_parallel_thooft_loops_differ_by_stars(L):
    """Two same-direction 't Hooft lines are homotopic: their symmetric
    difference is exactly the boundary of a band of star operators."""
    lat = build_lattice(L)
    for o1, o2 in [(0, 1), (0, L - 1), (1, 2)]:
        if o1 == o2:
            continue
        a = noncontractible_loop(lat, "thooft", "h", o1)
        b = noncontractible_loop(lat, "thooft", "h", o2)
        diff = link_mask(a.links) ^ link_mask(b.links)
        lo, hi = min(o1, o2), max(o1, o2)
        band = 0
        for y in range(lo + 1, hi + 1):
            for x in range(L):
                band ^= link_mask(lat.star_links(x, y))
        assert band == diff
