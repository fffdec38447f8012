import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curved_dg.geometry import (EXACT_ANNULUS, INNER, OUTER, FullAnnulus, InvertedElementError,
                                MeshConfigurationError, QuarterAnnulus, annulus_map,
                                boundary_geometry_error, compute_geometry_maps, discrete_area,
                                generate_tobecurved_annulus, mesh_size_h, mesh_svg, read_mesh,
                                square_mesh, write_mesh)
from curved_dg.reference import build_reference_element

Q = QuarterAnnulus()


def test_annulus_map_corners():
    assert np.allclose(annulus_map([0, 0], Q), [1, 0])
    assert np.allclose(annulus_map([1, 1], Q), [0, 1.384], atol=1e-14)
    assert np.allclose(annulus_map([0.5, 0], Q), [1.192, 0])


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_annulus_map_lands_in_annulus(a, b):
    x = annulus_map([a, b], Q)
    r = np.hypot(*x)
    assert 1 - 1e-14 <= r <= 1.384 + 1e-14
    assert x[0] >= -1e-14 and x[1] >= -1e-14


def test_inner_arc_nodes_on_circle():
    mesh = generate_tobecurved_annulus("tri", 2, 1, 1.0, Q)
    gref = build_reference_element("tri", 2)
    worst = 0.0
    for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
        if tag == INNER:
            xs = mesh.nodes[e]
            r = np.hypot(xs[:, 0], xs[:, 1])
            on = np.isclose(r, 1.0, atol=1e-6)
            worst = max(worst, np.abs(r[on] - 1).max())
            assert on.sum() >= 3
    assert worst < 1e-12
    assert gref.num_nodes == mesh.nodes.shape[1]


@pytest.mark.parametrize("kind", ["tri", "quad"])
@pytest.mark.parametrize("kg", [1, 2, 3])
def test_shared_faces_conform(kind, kg):
    mesh = generate_tobecurved_annulus(kind, kg, 1, 1.0, Q)
    ref = build_reference_element(kind, 2)
    maps = compute_geometry_maps(mesh, ref)
    for eL, fL, eR, fR, _ in mesh.interior_faces:
        xl = maps.x_face[eL, fL]
        xr = maps.x_face[eR, fR][::-1]
        assert np.abs(xl - xr).max() < 1e-12
        assert np.abs(maps.normal[eL, fL] + maps.normal[eR, fR][::-1]).max() < 1e-12


@pytest.mark.parametrize("kind", ["tri", "quad"])
def test_metric_invariants(kind):
    mesh = generate_tobecurved_annulus(kind, 3, 1, 2.5, Q)
    maps = compute_geometry_maps(mesh, build_reference_element(kind, 3))
    assert (maps.jac_det > 0).all()
    assert np.abs(np.linalg.norm(maps.normal, axis=-1) - 1).max() < 1e-14
    eye = np.einsum("...ij,...jk->...ik", maps.jac, maps.inv_jac)
    assert np.abs(eye - np.eye(2)).max() < 1e-12


def test_boundary_tags_complete():
    mesh = generate_tobecurved_annulus("tri", 1, 0, 1.0, Q)
    assert set(mesh.boundary_tags) == {"inner", "outer", "theta_start", "theta_end"}
    nb = len(mesh.boundary_faces)
    assert nb == 2 * mesh.n_rho + 2 * mesh.n_theta
    # each element face is either interior (counted twice) or boundary
    assert 2 * len(mesh.interior_faces) + nb == mesh.num_elements * 3


def test_full_annulus_is_periodic():
    mesh = generate_tobecurved_annulus("quad", 2, 0, 1.0, FullAnnulus())
    assert set(mesh.boundary_tags) == {"inner", "outer"}
    assert 2 * len(mesh.interior_faces) + len(mesh.boundary_faces) == 4 * mesh.num_elements


def test_levels_double_counts_and_halve_h():
    h = [mesh_size_h(generate_tobecurved_annulus("tri", 1, l, 2.5, Q)) for l in range(3)]
    assert h[0] / h[1] == pytest.approx(2.0, abs=1e-12)
    assert h[1] / h[2] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("ar", [1.0, 2.5, 8.0])
def test_realized_aspect_ratio_tracks_target(ar):
    mesh = generate_tobecurved_annulus("quad", 1, 0, ar, Q, n_base=8)
    arc = Q.mean_arc_length / mesh.n_theta
    dr = Q.width / mesh.n_rho
    assert arc / dr == pytest.approx(ar, rel=0.25)


def test_unreachable_aspect_ratio():
    with pytest.raises(MeshConfigurationError):
        generate_tobecurved_annulus("tri", 1, 0, 20.0, Q, n_base=2)


@pytest.mark.parametrize("kg,order", [(1, 2), (2, 4), (3, 4), (4, 6)])
def test_arc_interpolation_error_order(kg, order):
    # with nodes symmetric about each face midpoint the even orders pick up
    # one extra power of h in the wall-normal direction
    e = [boundary_geometry_error(generate_tobecurved_annulus("tri", kg, l, 1.0, Q), 41)
         for l in (0, 1)]
    assert math.log2(e[0] / e[1]) == pytest.approx(order, abs=0.15)


def test_discrete_area_converges():
    errs = [abs(discrete_area(generate_tobecurved_annulus("tri", 1, l, 1.0, Q)) - Q.area)
            for l in (0, 1, 2)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert abs(discrete_area(generate_tobecurved_annulus("tri", 3, 1, 1.0, Q)) - Q.area) < 1e-6


def test_geometry_normals_close_to_radial():
    mesh = generate_tobecurved_annulus("tri", 2, 1, 1.0, Q)
    maps = compute_geometry_maps(mesh, build_reference_element("tri", 2))
    h = mesh_size_h(mesh)
    for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
        if tag == INNER:
            x = maps.x_face[e, f]
            radial = -x / np.linalg.norm(x, axis=-1, keepdims=True)
            assert np.abs(maps.normal[e, f] - radial).max() <= 10 * h ** 2


def test_exact_normals_mode():
    mesh = generate_tobecurved_annulus("tri", 1, 1, 1.0, Q)
    ref = build_reference_element("tri", 1)
    geo = compute_geometry_maps(mesh, ref)
    ex = compute_geometry_maps(mesh, ref, EXACT_ANNULUS)
    for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
        x = ex.x_face[e, f]
        if tag == OUTER:
            assert np.allclose(ex.normal[e, f], x / np.linalg.norm(x, axis=-1, keepdims=True))
        elif tag not in (INNER,):
            assert np.array_equal(ex.normal[e, f], geo.normal[e, f])
    # the area element still comes from the polynomial geometry
    assert np.array_equal(ex.area_elem, geo.area_elem)


def test_inverted_element_detected():
    mesh = square_mesh("tri", 2)
    mesh.nodes[0] = mesh.nodes[0][[1, 0, 2]]
    with pytest.raises(InvertedElementError):
        compute_geometry_maps(mesh, build_reference_element("tri", 1))


def test_mesh_text_round_trip():
    mesh = generate_tobecurved_annulus("quad", 2, 0, 2.5, Q)
    buf = io.StringIO()
    write_mesh(mesh, buf)
    back = read_mesh(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.interior_faces, mesh.interior_faces)
    assert list(back.boundary_tags) == list(mesh.boundary_tags)
    assert back.ar_realized == mesh.ar_realized


def test_svg_wireframe():
    svg = mesh_svg(generate_tobecurved_annulus("tri", 2, 0, 1.0, Q))
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
