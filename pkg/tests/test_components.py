from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatframe.components import (coalesce_slice_dofs, connect_system, find_parallelepipeds, find_slices,
                                  instantiate_components)
from heatframe.errors import DanglingComponent, NonPositiveDimension, NoSharedFace
from heatframe.geometry import coincident
from heatframe.parser import parse_statement
from heatframe.template import assemble_template

from builders import brick_wall_statement, fixture_text, grid_boxes, pipeline, pipeline_text, touching, \
    wall_chain_statement

F = Fraction
U_BOXES = grid_boxes(["0.05", "0.05"], ["0.1"] * 3, [[True, False, True], [True, True, True]])


def port_oracle(system):
    """Ports share a dof iff their faces coincide; closure by brute force."""
    ports = [(i, p) for i in range(len(system.components)) for p in (0, 1)]
    face = {(i, p): system.components[i].ports[p] for i, p in ports}
    same = {(a, b) for a in ports for b in ports if a == b or coincident(face[a], face[b])}
    return same, ports


def assert_dof_map_matches_oracle(system):
    same, ports = port_oracle(system)
    for a in ports:
        for b in ports:
            assert (system.dof_map[a] == system.dof_map[b]) == ((a, b) in same), (a, b)
    assert sorted(set(system.dof_map.values())) == list(range(system.n_global))


def test_pine_layer_geometry():
    pine = pipeline("wall-1d")[3].components[1]
    assert pine.shape.section == (F(1, 10), F(1, 10))
    assert pine.shape.interval("x") == (F(1, 20), F(3, 20))
    assert pine.shape.length == F(1, 10)
    assert len(pine.faces) == 3


def test_brick3_geometry():
    b3 = pipeline("wall-3d")[3].components[2]
    assert b3.shape.intervals == (("x_1", F(1, 20), F(1, 10)), ("x_2", F(0), F(1, 10)), ("x_3", F(1, 10), F(1, 5)))
    assert len(b3.faces) == 6
    assert [f.id for f in b3.ports] == ["x_1:lo", "x_1:hi"]


def test_zero_dimension():
    with pytest.raises(NonPositiveDimension):
        frame = parse_statement(fixture_text("wall-1d").replace("$a = 0.1$", "$a = 0$"))
        instantiate_components(assemble_template(frame))


@pytest.mark.parametrize("name, n, xs", [
    ("wall-1d", 4, [0, F(1, 20), F(3, 20), F(1, 5)]),
    ("spoon", 3, [F(-1, 20), 0, F(3, 25)]),
])
def test_chain_dofs(name, n, xs):
    s = pipeline(name)[3]
    assert s.n_global == n
    assert s.dof_x == xs
    assert_dof_map_matches_oracle(s)


def test_wall3d_dofs():
    # brick 1 and brick 2 share a port; the left ports of bricks 3 and 4 stay separate
    s = pipeline("wall-3d")[3]
    assert s.n_global == 7
    assert s.dof_map[(0, 1)] == s.dof_map[(1, 0)]
    assert len({s.dof_map[(2, 0)], s.dof_map[(3, 0)], s.dof_map[(0, 1)]}) == 3
    assert_dof_map_matches_oracle(s)


def test_wall3d_connections():
    s = pipeline("wall-3d")[3]
    pairs = {(s.components[c.i].name, s.components[c.j].name): c.area for c in s.connections}
    assert pairs[("brick 1", "brick 2")] == F(1, 100)
    assert pairs[("brick 2", "brick 3")] == F(1, 200)
    assert pairs[("brick 2", "brick 4")] == F(1, 200)


def test_no_shared_face():
    comps = pipeline("wall-1d")[3].components
    with pytest.raises(NoSharedFace):
        connect_system(comps, [("fir layer", "cedar layer"), ("fir layer", "pine layer"),
                               ("pine layer", "cedar layer")])


def test_dangling_component():
    comps = pipeline("wall-1d")[3].components
    with pytest.raises(DanglingComponent):
        connect_system(comps, [("fir layer", "pine layer")])


def test_wall3d_slices():
    s = pipeline("wall-3d")[3]
    sl = find_slices(s)
    assert sl.m1 == 3
    assert sl.x1_values == [0, F(1, 20), F(1, 10)]
    # middle slice covers -b < x3 < 2b and is connected
    mid = sl.slices[1]
    x3 = [iv for p in mid for iv in p.rect if iv[0] == "x_3"]
    assert min(iv[1] for iv in x3) == F(-1, 10) and max(iv[2] for iv in x3) == F(1, 5)
    assert [len(parts) for parts in sl.connected_parts] == [1, 1, 1]
    cm = coalesce_slice_dofs(s, sl)
    assert cm.n == 3


def test_single_brick_slices():
    s = pipeline_text(brick_wall_statement([(0, F(1, 20), 0, F(1, 10))]))[3]
    assert find_slices(s).m1 == 2
    assert find_parallelepipeds(s).m_ppd == 1


def test_disconnected_slice_splits():
    s = pipeline_text(brick_wall_statement(U_BOXES))[3]
    sl = find_slices(s)
    assert [len(p) for p in sl.connected_parts] == [2, 1, 1]
    assert coalesce_slice_dofs(s, sl).n == 4
    assert coalesce_slice_dofs(s, sl, split_parts=False).n == 3


def test_wall3d_parallelepipeds():
    s = pipeline("wall-3d")[3]
    pp = find_parallelepipeds(s)
    assert pp.m_ppd == 3
    assert [m.members for m in pp.members] == [(0, 1), (2,), (3,)]
    assert [(m.robin_left, m.robin_right) for m in pp.members] == [(True, True), (False, True), (False, True)]


def test_grid_2x2_two_members():
    s = pipeline_text(brick_wall_statement(grid_boxes(["0.05", "0.05"], ["0.1", "0.1"])))[3]
    assert find_parallelepipeds(s).m_ppd == 2


def test_chain_coalescing_is_identity():
    s = pipeline_text(brick_wall_statement(grid_boxes(["0.02", "0.03", "0.05"], ["0.1"])))[3]
    cm = coalesce_slice_dofs(s, find_slices(s))
    assert cm.n == s.n_global
    for a in s.dof_map:
        for b in s.dof_map:
            assert (cm.port_map[a] == cm.port_map[b]) == (s.dof_map[a] == s.dof_map[b])


def _check_decomposition(system):
    sl = find_slices(system)
    cm = coalesce_slice_dofs(system, sl)
    # quotient: ports sharing a dof keep sharing it
    for a in system.dof_map:
        for b in system.dof_map:
            if system.dof_map[a] == system.dof_map[b]:
                assert cm.port_map[a] == cm.port_map[b]
    stations = {v for c in system.components for v in (c.x_left, c.x_right)}
    assert sl.m1 == len(stations)
    pp = find_parallelepipeds(system)
    seen = sorted(i for m in pp.members for i in m.members)
    assert seen == list(range(len(system.components)))
    assert sum(m.volume for m in pp.members) == sum(c.shape.volume for c in system.components)


@pytest.mark.parametrize("boxes", [U_BOXES, grid_boxes(["0.05", "0.05"], ["0.1", "0.1"])])
def test_decomposition_invariants(boxes):
    _check_decomposition(pipeline_text(brick_wall_statement(boxes))[3])


def test_wall3d_decomposition_invariants():
    _check_decomposition(pipeline("wall-3d")[3])


@st.composite
def grids(draw):
    nx = draw(st.integers(1, 3))
    nz = draw(st.integers(1, 3))
    widths = draw(st.lists(st.sampled_from(["0.02", "0.05", "0.1"]), min_size=nx, max_size=nx))
    heights = draw(st.lists(st.sampled_from(["0.05", "0.1", "0.2"]), min_size=nz, max_size=nz))
    present = [[draw(st.booleans()) for _ in range(nz)] for _ in range(nx)]
    boxes = grid_boxes(widths, heights, present)
    return boxes


def _connected(boxes):
    if not boxes:
        return False
    seen, stack = {0}, [0]
    while stack:
        a = stack.pop()
        for b in range(len(boxes)):
            if b not in seen and touching(boxes[a], boxes[b]):
                seen.add(b)
                stack.append(b)
    return len(seen) == len(boxes)


def _has_both_ends(boxes):
    left = min(b[0] for b in boxes)
    right = max(b[1] for b in boxes)
    return any(b[0] == left for b in boxes) and any(b[1] == right for b in boxes)


@settings(max_examples=20, deadline=None)
@given(grids())
def test_random_grid_invariants(boxes):
    if not _connected(boxes) or not _has_both_ends(boxes):
        return
    s = pipeline_text(brick_wall_statement(boxes))[3]
    assert_dof_map_matches_oracle(s)
    _check_decomposition(s)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from(["0.01", "0.02", "0.05", "0.1"]), min_size=1, max_size=10))
def test_random_chain_union_find(lengths):
    s = pipeline_text(wall_chain_statement(lengths, ["1"] * len(lengths)))[3]
    assert s.n_global == len(lengths) + 1
    for i in range(len(lengths) - 1):
        assert s.dof_map[(i, 1)] == s.dof_map[(i + 1, 0)]
    assert_dof_map_matches_oracle(s)
