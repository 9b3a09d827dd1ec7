import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from bqcnn.ansatz import build_bqcnn, build_qcnn
from bqcnn.expressibility import (
    FidelityHistogram,
    TemplateCircuit,
    empty_circuit,
    estimate,
    fidelity,
    haar_bin_mass,
    prepare_states,
    sample_fidelities,
)


def haar_density(f, n):
    d = 2**n
    return (d - 1) * (1 - f) ** (d - 2)


def test_haar_bin_mass_closed_form():
    assert haar_bin_mass(0.0, 0.5, 3) == pytest.approx(0.9921875, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_haar_bin_mass_matches_quadrature(n):
    for lo, hi in [(0.0, 0.1), (0.25, 0.3), (0.6, 1.0)]:
        ref, _ = quad(haar_density, lo, hi, args=(n,), epsabs=1e-14)
        assert haar_bin_mass(lo, hi, n) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(cuts=st.lists(st.floats(0.001, 0.999), min_size=0, max_size=30, unique=True), n=st.integers(1, 10))
def test_haar_partition_sums_to_one(cuts, n):
    edges = [0.0] + sorted(cuts) + [1.0]
    total = sum(haar_bin_mass(a, b, n) for a, b in zip(edges, edges[1:]) if b > a)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_bad_bin_rejected():
    with pytest.raises(ValueError):
        haar_bin_mass(0.5, 0.5, 2)
    with pytest.raises(ValueError):
        haar_bin_mass(-0.1, 0.5, 2)


def test_fidelity_one_lands_in_last_bin():
    h = FidelityHistogram.from_fidelities([0.0, 0.5, 1.0, 1.0], 4)
    assert h.counts.tolist() == [1, 0, 1, 2]


def test_single_qubit_su2_is_nearly_haar():
    kl, hist = estimate(TemplateCircuit(1, (("su2", (0,)),)), n_pairs=100_000, n_bins=75, seed=0)
    assert kl < 0.02
    assert hist.n_samples == 100_000


def test_empty_circuit_is_maximally_inexpressive():
    kl, hist = estimate(empty_circuit(2), n_pairs=200, n_bins=500, seed=0)
    assert hist.counts[-1] == 200
    assert kl == pytest.approx(-np.log(haar_bin_mass(0.998, 1.0, 2)), rel=1e-9)


def test_fidelity_matches_direct_overlap(rng):
    c = TemplateCircuit(2, (("su2", (0,)), ("su2", (1,)), ("su4", (0, 1))))
    a, b = rng.uniform(0, 6, (2, c.n_params))
    s = prepare_states(c, np.stack([a, b]))
    assert fidelity(c, a, b) == pytest.approx(abs(np.vdot(s[0], s[1])) ** 2)
    assert fidelity(c, a, a) == pytest.approx(1.0)


def test_branching_states_are_normalized(rng):
    for c in (build_qcnn(4), build_bqcnn(4)):
        s = prepare_states(c, rng.uniform(0, 6, (5, c.n_params)))
        np.testing.assert_allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-12)


def test_sampling_is_reproducible():
    c = build_qcnn(4)
    a = sample_fidelities(c, 40, seed=3)
    b = sample_fidelities(c, 40, seed=3, chunk=7)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_fidelities(c, 40, seed=4))


def test_estimate_validates_arguments():
    with pytest.raises(ValueError):
        estimate(empty_circuit(1), n_pairs=0)
    with pytest.raises(ValueError):
        estimate(empty_circuit(1), n_bins=1)


def test_template_run_matches_prepare(rng):
    c = TemplateCircuit(2, (("su2", (1,)), ("su4", (1, 0))))
    p = rng.uniform(0, 6, (3, c.n_params))
    zero = np.zeros((1, 4), complex)
    zero[0, 0] = 1
    np.testing.assert_allclose(c.run(p, zero)[:, 0], prepare_states(c, p), atol=1e-15)
    np.testing.assert_allclose(c.run(p[1], zero)[0], prepare_states(c, p)[1], atol=1e-15)
    p1 = c.classify(p, np.eye(4))
    assert p1.shape == (3, 4)
