import numpy as np
import pytest

import oracles

from treejacobi import (
    NumericalError,
    dos_grid,
    find_atoms,
    find_gaps,
)


def test_kesten_mckay_pointwise(theta3_dos):
    dos = theta3_dos
    inside = np.abs(dos.energies) < 2.6  # stay clear of the band edge
    ref = oracles.kesten_mckay_density(dos.energies[inside], 3)
    assert np.max(np.abs(dos.density[inside] - ref)) < 2e-3


def test_kesten_mckay_ids(theta3_dos):
    dos = theta3_dos
    inside = np.abs(dos.energies) < 2.6
    ref = oracles.kesten_mckay_ids(dos.energies[inside], 3)
    assert np.max(np.abs(dos.ids[inside] - ref)) < 2e-3


def test_theta_support_and_mass(theta3_dos):
    dos = theta3_dos
    edge = 2.0 * np.sqrt(2.0)
    assert dos.support[0] == pytest.approx(-edge, abs=1e-2)
    assert dos.support[1] == pytest.approx(edge, abs=1e-2)
    assert dos.mass_total == pytest.approx(1.0, abs=2e-3)
    assert dos.atoms == []
    assert dos.gaps == []


def test_arcsine_law_on_self_loop(loop1):
    dos = dos_grid(*loop1, n_points=4801)
    inside = np.abs(dos.energies) < 1.8
    ref = oracles.arcsine_density(dos.energies[inside])
    assert np.max(np.abs(dos.density[inside] - ref)) < 2e-3
    ref_ids = oracles.arcsine_ids(dos.energies[inside])
    assert np.max(np.abs(dos.ids[inside] - ref_ids)) < 2e-3
    assert dos.atoms == [] and dos.gaps == []


def test_c2_band_structure(c2_dos):
    dos = c2_dos
    edges = oracles.band_edges([1.0, 1.0], [1.0, -1.0])  # -sqrt5,-1,1,sqrt5
    assert dos.support[0] == pytest.approx(edges[0], abs=0.05)
    assert dos.support[1] == pytest.approx(edges[3], abs=0.05)
    assert len(dos.gaps) == 1
    gap = dos.gaps[0]
    # detected gap sits inside the true one and carries label 1
    assert edges[1] - 0.02 <= gap.left <= gap.right <= edges[2] + 0.02
    assert gap.left < 0 < gap.right
    assert gap.label == 1 and gap.residual < 1e-3 and not gap.suspect
    assert dos.atoms == []


def test_c2_no_false_atoms_at_van_hove_edges(c2_dos):
    # 1/sqrt divergences must not be reported as point masses
    assert c2_dos.atoms == []
    assert c2_dos.mass_total == pytest.approx(1.0, abs=5e-3)


def test_c3_band_structure(c3_dos):
    dos = c3_dos
    edges = oracles.band_edges([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    assert dos.support[0] == pytest.approx(edges[0], abs=0.05)
    assert dos.support[1] == pytest.approx(edges[-1], abs=0.05)
    assert len(dos.gaps) == 2
    labels = sorted(g.label for g in dos.gaps)
    assert labels == [1, 2]
    for gap in dos.gaps:
        assert gap.residual < 1e-3 and not gap.suspect
    # each detected gap nests inside a true spectral gap
    true_gaps = [(edges[1], edges[2]), (edges[3], edges[4])]
    for gap in sorted(dos.gaps, key=lambda g: g.left):
        lo, hi = true_gaps.pop(0)
        assert lo - 0.02 <= gap.left <= gap.right <= hi + 0.02


def test_k23_atom_and_gaps(k23_dos):
    dos = k23_dos
    inner, outer = oracles.k23_band_edges()
    assert dos.support[0] == pytest.approx(-outer, abs=0.03)
    assert dos.support[1] == pytest.approx(outer, abs=0.03)
    assert len(dos.atoms) == 1
    atom = dos.atoms[0]
    assert atom.lam == pytest.approx(0.0, abs=1e-6)
    assert atom.mass == pytest.approx(oracles.K23_ATOM_MASS, abs=1e-4)
    # eigenvectors live on the larger side only: weights (0,0,1/3,1/3,1/3)
    assert np.allclose(atom.weights[:2], 0.0, atol=1e-6)
    assert np.allclose(atom.weights[2:], 1.0 / 3.0, atol=1e-4)
    assert atom.fit_residual < 0.02
    labels = sorted(g.label for g in dos.gaps)
    assert labels == [2, 3]
    for gap in dos.gaps:
        assert abs(gap.left) <= outer and gap.residual < 1e-3


def test_ids_monotone_and_normalized(all_dos):
    for name, dos in all_dos.items():
        diffs = np.diff(dos.ids)
        assert np.min(diffs) > -1e-12, name
        assert dos.ids[0] < 5e-3, name
        assert dos.ids[-1] == pytest.approx(1.0, abs=5e-3), name


def test_density_nonnegative_and_converged(all_dos):
    for name, dos in all_dos.items():
        assert np.all(dos.density >= 0), name
        assert not np.any(dos.flags & 1), name  # FLAG_NO_CONVERGE


def test_atom_search_rejects_smooth_point(theta3):
    g, params = theta3
    assert find_atoms(g, params, [0.5, -1.0]) == []


def test_atom_search_finds_k23_kernel(k23):
    g, params = k23
    atoms = find_atoms(g, params, [0.0])
    assert len(atoms) == 1
    assert atoms[0].mass == pytest.approx(0.2, abs=1e-4)


def test_find_gaps_flags_spectrum_as_no_gap(theta3_dos):
    gaps = find_gaps(theta3_dos)
    assert gaps == []


def test_workers_bit_identical(c2):
    g, params = c2
    one = dos_grid(g, params, n_points=301, workers=1)
    two = dos_grid(g, params, n_points=301, workers=4)
    assert np.array_equal(one.density, two.density)
    assert np.array_equal(one.ids, two.ids)


def test_grid_not_covering_spectrum_raises(c2):
    g, params = c2
    with pytest.raises(NumericalError):
        dos_grid(g, params, e_range=(10.0, 12.0), n_points=101)


def test_eps_ladder_recorded(theta3_dos):
    lad = np.asarray(theta3_dos.eps_ladder)
    assert lad.shape[0] >= 3
    assert np.all(np.diff(lad) < 0)
