import numpy as np
import pytest

from cascade_stokes import Tag, classify_boundary, generate_mesh, read_mesh, structured_mesh, write_mesh
from cascade_stokes.errors import InvariantViolation, MeshFailure, ParseError
from cascade_stokes.mesh import Mesh, fill_profile


def test_structured_counts(small_mesh):
    assert small_mesh.n_vertices == 15
    assert small_mesh.n_triangles == 16
    assert len(small_mesh.periodic_pairs) == 5


def _check_invariants(mesh, geometry):
    assert np.all(mesh.signed_areas > 0)
    off = mesh.vertices[mesh.periodic_pairs[:, 1]] - mesh.vertices[mesh.periodic_pairs[:, 0]]
    # exact translates: per pair, not merely within tolerance
    assert np.all(off[:, 0] == 0.0)
    np.testing.assert_allclose(off[:, 1], geometry.tau, rtol=0, atol=1e-12 * geometry.tau)
    a, b = mesh.vertices[mesh.boundary_edges[:, 0]], mesh.vertices[mesh.boundary_edges[:, 1]]
    # chord midpoints sit off a curved boundary by the sagitta, O(h^2)
    tol = 1e-9 + (mesh.h**2 if geometry.profile is not None or len(geometry.lower_curve.control_points) > 2 else 0.0)
    for m, t in zip(0.5 * (a + b), mesh.boundary_tags):
        assert classify_boundary(geometry, m, tol=tol) == Tag(t)
    assert len(mesh.periodic_edge_pairs) == len(mesh.tagged_edges(Tag.LOWER))
    assert mesh.area == pytest.approx(geometry.area, rel=1e-10 if geometry.profile is None else 2e-3)


def test_strip_invariants(strip, strip_mesh):
    _check_invariants(strip_mesh, strip)


def test_curved_invariants(curved_strip, curved_mesh):
    _check_invariants(curved_mesh, curved_strip)


def test_bladed_invariants(bladed, bladed_mesh):
    _check_invariants(bladed_mesh, bladed)
    assert len(bladed_mesh.tagged_edges(Tag.PROFILE)) > 0


def test_partition_area_matches_polygon(bladed_mesh):
    # triangles partition the polygon bounded by the tagged edges (shoelace on each loop)
    def shoelace(tags):
        e = bladed_mesh.tagged_edges(*tags)
        a, b = bladed_mesh.vertices[e[:, 0]], bladed_mesh.vertices[e[:, 1]]
        return abs(0.5 * np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))

    outer = shoelace((Tag.LOWER, Tag.OUTFLOW, Tag.UPPER, Tag.INFLOW))
    hole = shoelace((Tag.PROFILE,))
    assert bladed_mesh.area == pytest.approx(outer - hole, rel=1e-12)


def test_tag_completeness(bladed_mesh):
    boundary = set(np.flatnonzero(bladed_mesh.edge_triangles[:, 1] < 0).tolist())
    tagged = {bladed_mesh.edge_id(int(a), int(b)) for a, b in bladed_mesh.boundary_edges}
    assert boundary == tagged
    assert len(tagged) == len(bladed_mesh.boundary_edges)


def test_refinement_quadruples_vertices(strip):
    coarse = generate_mesh(strip, 0.2)
    fine = generate_mesh(strip, 0.1)
    assert 3.2 <= fine.n_vertices / coarse.n_vertices <= 4.8


def test_unstructured_refinement_quadruples_vertices(curved_strip):
    coarse = generate_mesh(curved_strip, 0.2, kind="unstructured")
    fine = generate_mesh(curved_strip, 0.1, kind="unstructured")
    assert 3.2 <= fine.n_vertices / coarse.n_vertices <= 4.8


def test_h_is_max_edge(small_mesh):
    assert small_mesh.h == pytest.approx(np.hypot(0.5, 0.5))


def test_round_trip(tmp_path, small_mesh, bladed_mesh):
    for m in (small_mesh, bladed_mesh):
        path = tmp_path / "m.txt"
        write_mesh(m, path)
        back = read_mesh(path)
        assert back == m
        assert np.array_equal(back.vertices, m.vertices)


def _corrupt(tmp_path, mesh, edit):
    path = tmp_path / "m.txt"
    write_mesh(mesh, path)
    lines = path.read_text().splitlines()
    lines = edit(lines)
    path.write_text("\n".join(lines) + "\n")
    return path


def test_negative_area_rejected(tmp_path, small_mesh):
    def flip(lines):
        i = next(k for k, s in enumerate(lines) if s.startswith("t "))
        _, a, b, c = lines[i].split()
        lines[i] = f"t {a} {c} {b}"
        return lines

    with pytest.raises(InvariantViolation):
        read_mesh(_corrupt(tmp_path, small_mesh, flip))


def test_pairing_offset_rejected(tmp_path, small_mesh):
    top = int(small_mesh.periodic_pairs[2, 1])

    def shift(lines):
        i = next(k for k, s in enumerate(lines) if s.startswith("v ")) + top
        _, x, y = lines[i].split()
        lines[i] = f"v {float(x) + 1e-6!r} {y}"
        return lines

    with pytest.raises(InvariantViolation):
        read_mesh(_corrupt(tmp_path, small_mesh, shift))


def test_parse_error_reports_line(tmp_path, small_mesh):
    def garble(lines):
        lines[5] = "v 0.0 not-a-number"
        return lines

    with pytest.raises(ParseError) as exc:
        read_mesh(_corrupt(tmp_path, small_mesh, garble))
    assert exc.value.line == 6


def test_bad_header(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("hello\n")
    with pytest.raises(ParseError):
        read_mesh(p)


def test_unpaired_lower_vertex(small_mesh):
    m = Mesh(
        small_mesh.vertices,
        small_mesh.triangles,
        small_mesh.boundary_edges,
        small_mesh.boundary_tags,
        small_mesh.periodic_pairs[:-1],
        small_mesh.tau,
    )
    with pytest.raises(InvariantViolation):
        m.validate()


def test_structured_rejects_blade(bladed):
    with pytest.raises(MeshFailure):
        structured_mesh(bladed, 4, 2)


def test_fill_profile_keeps_outer_triangles(bladed_mesh):
    filled, n_outer = fill_profile(bladed_mesh)
    assert n_outer == bladed_mesh.n_triangles
    assert np.array_equal(filled.triangles[:n_outer], bladed_mesh.triangles)
    assert filled.area == pytest.approx(2.0, rel=1e-12)
    assert len(filled.tagged_edges(Tag.PROFILE)) == 0


def test_generation_is_deterministic(bladed):
    assert generate_mesh(bladed, 0.15) == generate_mesh(bladed, 0.15)
