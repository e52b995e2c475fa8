"""Neumann eigenpairs and bracket-index arithmetic."""
import numpy as np
import pytest

from ksbench import spectrum
from ksbench.errors import ResonanceError

SQUARE_MODES = np.pi ** 2 * np.array([1.0, 1.0, 2.0, 4.0, 4.0, 5.0])


def test_square_eigenvalues_analytic(square64_basis):
    got = square64_basis.eigenvalues[:6]
    assert np.all(np.abs(got - SQUARE_MODES) <= 0.01 * SQUARE_MODES)


def test_eigenvalues_sorted_positive(disk128_basis):
    lam = disk128_basis.eigenvalues
    assert np.all(np.diff(lam) >= -1e-12)
    assert lam[0] > 0.0


def test_eigenvectors_mass_orthonormal_zero_mean(square64, square64_basis):
    from ksbench.energy import EnergyFunctional
    model = EnergyFunctional.for_mesh(square64)
    V = square64_basis.eigenvectors
    G = V.T @ (model.mass @ V)
    assert np.allclose(G, np.eye(V.shape[1]), atol=1e-9)
    means = model.lumped @ V
    assert np.abs(means).max() < 1e-9


def test_repeat_runs_span_same_subspace(square64):
    # Degenerate pairs may rotate between runs; the eigenvalues and the
    # projection of a fixed probe onto the computed span must agree.
    a = spectrum.eigenpairs(square64, 6)
    b = spectrum.eigenpairs(square64, 6)
    assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-10)
    rng = np.random.default_rng(0)
    z = rng.standard_normal(square64.num_vertices)
    Mz_a = a.eigenvectors @ (a.eigenvectors.T @ (a.mass @ z))
    Mz_b = b.eigenvectors @ (b.eigenvectors.T @ (b.mass @ z))
    assert np.allclose(Mz_a, Mz_b, atol=1e-8)


def test_bracket_index_analytic():
    lam = [1.0, 2.0, 5.0]
    assert spectrum.bracket_index(lam, 0.5) == 0
    assert spectrum.bracket_index(lam, -1.5) == 1
    assert spectrum.bracket_index(lam, -10.0) == 3


def test_bracket_index_resonance():
    with pytest.raises(ResonanceError):
        spectrum.bracket_index([1.0, 2.0], -1.0)
    with pytest.raises(ResonanceError):
        spectrum.bracket_index([1.0, 2.0], -2.0 + 1e-9)


def test_dense_and_sparse_paths_agree(square24):
    # Small mesh uses the dense path; force comparison against shift-invert
    # by asking through the public interface at two counts.
    a = spectrum.eigenpairs(square24, 4)
    b = spectrum.eigenpairs(square24, 8)
    assert np.allclose(a.eigenvalues, b.eigenvalues[:4], rtol=1e-10)
