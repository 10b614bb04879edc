import numpy as np
import pytest

from helmlab import boundary, fem
from helmlab.exact import ExactSolution, abc2_manufactured, disk_robin_exact
from helmlab.linsolve import solve_sparse
from helmlab.mesh import Mesh, generate_disk_mesh, mesh_stats


def single_triangle():
    return Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
                np.array([0]), np.zeros((0, 3), dtype=np.int64), np.zeros(0), 1)


def linear_exact():
    return ExactSolution(
        u=lambda x, y: (np.asarray(x) + np.asarray(y)).astype(complex),
        grad=lambda x, y: np.stack(np.broadcast_arrays(np.ones_like(x), np.ones_like(y)), -1).astype(complex),
        f=None, g=None)


def robin_problem(k, sol=None, mesh=None):
    sol = sol or disk_robin_exact(k)
    return fem.HelmholtzProblem(k, 1.0, 2.0, boundary.Robin(1j * k), sol.f, sol.g, mesh)


@pytest.mark.parametrize("p,expected", [(1, 3), (4, 15)])
def test_single_triangle_dofs(p, expected):
    assert fem.build_space(single_triangle(), p).n_dof == expected


@pytest.mark.parametrize("p", range(1, 9))
def test_euler_count(p):
    m = generate_disk_mesh(1)
    edges, _ = m.edges
    sp = fem.build_space(m, p)
    assert sp.n_dof == m.n_vert + (p - 1) * len(edges) + (p - 1) * (p - 2) // 2 * m.n_tri
    if p == 2:
        assert fem.build_space(generate_disk_mesh(0), 2).n_dof == 19 + 42


@pytest.mark.parametrize("p", [2, 3, 5])
def test_dof_map_consistent_across_elements(p):
    """Shared dofs must map to the same physical node from every element."""
    sp = fem.build_space(generate_disk_mesh(1, min(p, 4)), p)
    pts, _, _ = sp.mesh.geometric_map(sp.basis.nodes[:, 1:])
    coords = np.full((sp.n_dof, 2), np.nan)
    for e in range(sp.mesh.n_tri):
        for a, g in enumerate(sp.dof_map[e]):
            if np.isnan(coords[g, 0]):
                coords[g] = pts[e, a]
            else:
                assert np.allclose(coords[g], pts[e, a], atol=1e-12)
        assert len(set(sp.dof_map[e])) == sp.basis.size
    assert not np.isnan(coords).any()


def test_boundary_dofs_on_circle():
    sp = fem.build_space(generate_disk_mesh(2, 3), 3)
    c = sp.dof_coordinates()[sp.boundary_dofs]
    assert np.allclose(np.hypot(c[:, 0], c[:, 1]), 1.0, atol=1e-12)
    assert len(sp.boundary_dofs) == 3 * 6 * 8


@pytest.mark.parametrize("p", [0, 9])
def test_degree_out_of_range(p):
    with pytest.raises(ValueError):
        fem.build_space(generate_disk_mesh(0), p)


def test_stiffness_annihilates_constants(backend):
    sp = fem.build_space(generate_disk_mesh(2), 3)
    stiff, _, _ = fem.volume_matrices(sp)
    assert np.abs(stiff @ np.ones(sp.n_dof)).max() < 1e-12


def test_volume_part_symmetric():
    sp = fem.build_space(generate_disk_mesh(2), 2)
    a, _ = fem.assemble(sp, robin_problem(4.0), volume_only=True)
    assert abs(a - a.T).max() <= 1e-12


def test_boundary_mass_is_perimeter():
    sp = fem.build_space(generate_disk_mesh(2, 4), 4)
    bmass, surf = fem.boundary_matrices(sp)
    one = np.ones(sp.n_dof)
    assert abs(one @ bmass @ one - 2 * np.pi) < 1e-8
    assert np.abs(surf @ one).max() < 1e-10


def test_backends_assemble_identically(monkeypatch):
    from helmlab import available_backends

    results = []
    for mod in available_backends().values():
        monkeypatch.setattr(fem, "kernels", mod)
        sp = fem.build_space(generate_disk_mesh(1), 3)
        a, b = fem.assemble(sp, robin_problem(4.0))
        results.append((a.toarray(), b))
    for a, b in results[1:]:
        assert np.allclose(a, results[0][0], rtol=1e-12, atol=1e-13)
        assert np.allclose(b, results[0][1], rtol=1e-12, atol=1e-14)


def test_example1_k4_level2_p2():
    sp = fem.build_space(generate_disk_mesh(2), 2)
    a, b = fem.assemble(sp, robin_problem(4.0))
    err = fem.error_norms(sp, solve_sparse(a, b), disk_robin_exact(4.0), 4.0)
    assert err.l2_rel < 5e-2


def test_interpolant_error_p4_level3():
    sp = fem.build_space(generate_disk_mesh(3, 4), 4)
    sol = disk_robin_exact(4.0)
    err = fem.error_norms(sp, fem.interpolate(sp, sol.u), sol, 4.0)
    assert err.l2_rel < 1e-5


@pytest.mark.parametrize("p", [1, 3])
def test_linear_reproduction(p):
    # the mapped space contains x + y only for geometry degree <= p
    sp = fem.build_space(generate_disk_mesh(1, p), p)
    sol = linear_exact()
    for t in (0.5, 1):
        err = fem.error_norms(sp, fem.interpolate(sp, sol.u), sol, 3.0, t)
        assert err.l2_rel < 1e-12 and err.energy_rel < 1e-12


def test_surface_term_only_adds():
    sp = fem.build_space(generate_disk_mesh(1), 2)
    sol = abc2_manufactured(4.0)
    uh = fem.interpolate(sp, sol.u) * (1 + 0.01j)
    e_half = fem.error_norms(sp, uh, sol, 4.0, 0.5)
    e_one = fem.error_norms(sp, uh, sol, 4.0, 1)
    assert e_one.energy_abs >= e_half.energy_abs
    assert e_half.l2_rel == e_one.l2_rel


def test_zero_exact_norm_rejected():
    sp = fem.build_space(generate_disk_mesh(0), 1)
    zero = ExactSolution(lambda x, y: np.zeros(np.shape(x), complex),
                         lambda x, y: np.zeros(np.shape(x) + (2,), complex), None, None)
    with pytest.raises(ValueError):
        fem.error_norms(sp, np.zeros(sp.n_dof), zero, 2.0)
    with pytest.raises(ValueError):
        fem.error_norms(sp, np.zeros(sp.n_dof), disk_robin_exact(2.0), 2.0, t=2)


def test_galerkin_orthogonality():
    sp = fem.build_space(generate_disk_mesh(2), 3)
    a, b = fem.assemble(sp, robin_problem(6.0))
    uh = solve_sparse(a, b)
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.standard_normal(sp.n_dof) + 1j * rng.standard_normal(sp.n_dof)
        assert abs(np.vdot(v, a @ uh) - np.vdot(v, b)) <= 1e-8 * np.linalg.norm(b) * np.linalg.norm(v)


def test_abc2_coercivity_proxy():
    k = 5.0
    sp = fem.build_space(generate_disk_mesh(1), 2)
    stiff, m_in, m_out = fem.volume_matrices(sp)
    _, surf = fem.boundary_matrices(sp)
    alpha, _ = boundary.abc2_params("feng", k)
    sigma = np.conj(alpha) / abs(alpha)
    bplus = stiff + k * k * (m_in + m_out) + alpha * surf
    rng = np.random.default_rng(11)
    for _ in range(20):
        v = rng.standard_normal(sp.n_dof) + 1j * rng.standard_normal(sp.n_dof)
        assert (sigma * np.vdot(v, bplus @ v)).real > 0


def test_short_convergence_slopes():
    k = 4.0
    sol = disk_robin_exact(k)
    for p in (1, 2):
        hs, l2, en = [], [], []
        for lv in (2, 3, 4):
            sp = fem.build_space(generate_disk_mesh(lv, max(p, 1)), p)
            a, b = fem.assemble(sp, robin_problem(k, sol))
            err = fem.error_norms(sp, solve_sparse(a, b), sol, k)
            hs.append(mesh_stats(sp.mesh).h_max)
            l2.append(err.l2_rel)
            en.append(err.energy_rel)
        assert abs(np.polyfit(np.log(hs), np.log(l2), 1)[0] - (p + 1)) <= 0.25
        assert abs(np.polyfit(np.log(hs), np.log(en), 1)[0] - p) <= 0.25


def test_errors():
    sp = fem.build_space(generate_disk_mesh(0), 1)
    with pytest.raises(fem.MeshMismatch):
        fem.assemble(sp, robin_problem(4.0, mesh=generate_disk_mesh(0)))
    with pytest.raises(ValueError):
        fem.HelmholtzProblem(0.1, 1.0, 1.0, None)
    with pytest.raises(ValueError):
        fem.HelmholtzProblem(2.0, float("nan"), 1.0, None)
    with pytest.raises(ValueError):
        fem.HelmholtzProblem(2.0, 1.0, 150.0, None)
    bad = fem.HelmholtzProblem(2.0, 1.0, 1.0, None, lambda x, y: np.full(np.shape(x), np.inf))
    with pytest.raises(ValueError):
        fem.assemble(sp, bad)
    with pytest.raises(TypeError):
        fem.assemble(sp, fem.HelmholtzProblem(2.0, 1.0, 1.0, object()))


def test_energy_projection_beats_galerkin():
    k = 8.0
    sol = disk_robin_exact(k)
    sp = fem.build_space(generate_disk_mesh(1), 2)
    a, b = fem.assemble(sp, robin_problem(k, sol))
    gal = fem.error_norms(sp, solve_sparse(a, b), sol, k)
    best = fem.error_norms(sp, fem.energy_projection(sp, sol, k), sol, k)
    interp = fem.error_norms(sp, fem.interpolate(sp, sol.u), sol, k)
    assert best.energy_abs <= gal.energy_abs * (1 + 1e-10)
    assert best.energy_abs <= interp.energy_abs * (1 + 1e-10)


def test_solution_csv_roundtrip(tmp_path):
    x = np.array([1.0 + 2.0j, -0.1, 3e-17j, np.pi])
    path = tmp_path / "u.csv"
    fem.write_solution_csv(x, path)
    assert path.read_text().splitlines()[0] == "dof,re,im"
    assert np.array_equal(fem.read_solution_csv(path), x)
