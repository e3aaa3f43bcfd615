import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rowex import (
    Alphabet,
    DomainError,
    InputError,
    MeasureOnPMFs,
    PMF,
    ResourceError,
    empirical_generator,
    empirical_row_distribution,
    pmf_metric_on_simplex,
    prohorov_distance,
    total_variation,
)
from rowex.measures import load_measure_file

from support import (
    max_subset_gap,
    random_euclidean_metric,
    random_weights,
    slow_prohorov,
)

HT = Alphabet(["H", "T"])
ABC = Alphabet(["a", "b", "c"])


class TestAlphabet:
    def test_requires_distinct_symbols(self):
        with pytest.raises(InputError):
            Alphabet(["x", "x"])

    def test_requires_nonempty(self):
        with pytest.raises(InputError):
            Alphabet([])

    def test_discrete_metric_implied(self):
        d = HT.distance_matrix()
        np.testing.assert_array_equal(d, [[0.0, 1.0], [1.0, 0.0]])

    def test_metric_validation(self):
        Alphabet(["x", "y"], metric=[[0.0, 0.3], [0.3, 0.0]])
        with pytest.raises(InputError):
            Alphabet(["x", "y"], metric=[[0.0, 0.3], [0.4, 0.0]])  # asymmetric
        with pytest.raises(InputError):
            Alphabet(["x", "y"], metric=[[0.1, 0.3], [0.3, 0.0]])  # diagonal
        with pytest.raises(InputError):
            Alphabet(["x", "y"], metric=[[0.0, 0.0], [0.0, 0.0]])  # zero off-diag
        with pytest.raises(InputError):
            # 1-0.1-0.1 violates the triangle inequality
            Alphabet(["x", "y", "z"],
                     metric=[[0, 1, 0.1], [1, 0, 0.1], [0.1, 0.1, 0]])

    def test_json_roundtrip(self):
        a = Alphabet(["x", "y"], metric=[[0.0, 0.5], [0.5, 0.0]])
        b = Alphabet.from_json(a.to_json())
        assert a == b


class TestPMF:
    def test_validates_sum(self):
        with pytest.raises(InputError):
            PMF([0.5, 0.6])

    def test_validates_range(self):
        with pytest.raises(InputError):
            PMF([1.2, -0.2])

    def test_unchecked_escape_hatch(self):
        p = PMF([0.5, 0.6], validate=False)
        assert p.weights.tolist() == [0.5, 0.6]

    def test_weights_readonly(self):
        p = PMF([0.5, 0.5])
        with pytest.raises(ValueError):
            p.weights[0] = 0.9

    def test_json_roundtrip(self):
        p = PMF([0.25, 0.75])
        assert PMF.from_json(p.to_json()).approx_equal(p)


class TestMeasureOnPMFs:
    def test_rejects_duplicate_atoms(self):
        p = PMF([0.5, 0.5])
        with pytest.raises(InputError):
            MeasureOnPMFs([(0.5, p), (0.5, PMF([0.5, 0.5]))])

    def test_rejects_bad_weight_sum(self):
        with pytest.raises(InputError):
            MeasureOnPMFs([(0.7, PMF([1.0, 0.0])), (0.5, PMF([0.0, 1.0]))])

    def test_json_roundtrip(self):
        m = MeasureOnPMFs([(0.25, PMF([1.0, 0.0])), (0.75, PMF([0.0, 1.0]))])
        again = MeasureOnPMFs.from_json(m.to_json())
        assert [w for w, _ in again.atoms] == [0.25, 0.75]


class TestEmpiricalRowDistribution:
    def test_counting(self):
        p = empirical_row_distribution(HT, ["H", "T", "H", "H"])
        assert p.weights.tolist() == [0.75, 0.25]

    def test_single_observation(self):
        p = empirical_row_distribution(HT, ["T"])
        assert p.weights.tolist() == [0.0, 1.0]

    def test_symmetry(self):
        p = empirical_row_distribution(ABC, list("abcabc"))
        np.testing.assert_array_equal(p.weights, [1 / 3, 1 / 3, 1 / 3])

    def test_unknown_symbol_names_position(self):
        with pytest.raises(InputError, match=r"'x' at position 2"):
            empirical_row_distribution(HT, ["H", "x"])

    def test_empty_row_is_domain_error(self):
        with pytest.raises(DomainError):
            empirical_row_distribution(HT, [])

    def test_power_of_two_sums_exactly(self):
        rng = np.random.default_rng(7)
        for n in (4, 8, 32, 128):
            row = [("H", "T")[b] for b in rng.integers(0, 2, n)]
            p = empirical_row_distribution(HT, row)
            assert p.weights.sum() == 1.0

    def test_general_lengths_sum_within_tolerance(self):
        rng = np.random.default_rng(8)
        for n in (3, 7, 11, 100, 999):
            row = [("a", "b", "c")[b] for b in rng.integers(0, 3, n)]
            p = empirical_row_distribution(ABC, row)
            assert abs(p.weights.sum() - 1.0) <= 1e-12


class TestEmpiricalGenerator:
    def test_merges_duplicates(self):
        g = empirical_generator([PMF([1.0, 0.0]), PMF([1.0, 0.0])])
        assert len(g) == 1
        assert g.atoms[0][0] == 1.0

    def test_two_distinct(self):
        g = empirical_generator([PMF([1.0, 0.0]), PMF([0.0, 1.0])])
        assert [w for w, _ in g.atoms] == [0.5, 0.5]

    def test_counting(self):
        p, q = PMF([0.25, 0.75]), PMF([0.75, 0.25])
        g = empirical_generator([p] * 25 + [q] * 75)
        assert [w for w, _ in g.atoms] == [0.25, 0.75]
        assert g.atoms[0][1].approx_equal(p)
        assert g.atoms[1][1].approx_equal(q)

    def test_weight_sum_and_membership(self):
        rng = np.random.default_rng(9)
        pool = [PMF(random_weights(rng, 3)) for _ in range(5)]
        draws = [pool[i] for i in rng.integers(0, 5, 60)]
        g = empirical_generator(draws)
        assert abs(sum(w for w, _ in g.atoms) - 1.0) <= 1e-12
        for _, atom in g.atoms:
            assert any(atom.approx_equal(p) for p in pool)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            empirical_generator([PMF([1.0, 0.0]), PMF([1.0, 0.0, 0.0])])

    def test_empty_list(self):
        with pytest.raises(DomainError):
            empirical_generator([])


class TestTotalVariation:
    def test_opposite_point_masses(self):
        assert total_variation(PMF([1.0, 0.0]), PMF([0.0, 1.0])) == 1.0

    def test_self_distance(self):
        p = PMF([0.3, 0.7])
        assert total_variation(p, p) == 0.0

    def test_arithmetic(self):
        assert total_variation(PMF([0.2, 0.8]), PMF([0.5, 0.5])) == pytest.approx(0.3, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            total_variation(PMF([1.0]), PMF([0.5, 0.5]))

    def test_simplex_metric_equals_tv(self):
        p, q = PMF([0.2, 0.8]), PMF([0.5, 0.5])
        assert pmf_metric_on_simplex(p, q) == total_variation(p, q)


class TestProhorovExamples:
    def test_identity(self):
        p = PMF([0.3, 0.4, 0.3])
        assert prohorov_distance(p, p) <= 1e-9

    def test_point_masses_equal_ground_distance(self):
        a = Alphabet(["x", "y"], metric=[[0.0, 0.3], [0.3, 0.0]])
        d = prohorov_distance(PMF([1.0, 0.0]), PMF([0.0, 1.0]), a)
        assert d == pytest.approx(0.3, abs=1e-9)

    def test_point_masses_cap_at_one(self):
        a = Alphabet(["x", "y"], metric=[[0.0, 1.7], [1.7, 0.0]])
        d = prohorov_distance(PMF([1.0, 0.0]), PMF([0.0, 1.0]), a)
        assert d == pytest.approx(1.0, abs=1e-9)

    def test_bernoulli_discrete_metric(self):
        """With discrete ground distances the value is the max subset gap."""
        mu, nu = PMF([0.8, 0.2]), PMF([0.5, 0.5])
        expected = max_subset_gap(mu.weights, nu.weights)
        assert expected == pytest.approx(0.3, abs=1e-12)
        assert prohorov_distance(mu, nu) == pytest.approx(expected, abs=1e-9)

    def test_measures_on_pmfs_point_mass_case(self):
        p, q = PMF([0.2, 0.8]), PMF([0.5, 0.5])
        m1 = MeasureOnPMFs([(1.0, p)])
        m2 = MeasureOnPMFs([(1.0, q)])
        d = prohorov_distance(m1, m2)
        assert d == pytest.approx(total_variation(p, q), abs=1e-9)

    def test_measures_on_pmfs_half_split(self):
        p, q = PMF([1.0, 0.0]), PMF([0.0, 1.0])
        m1 = MeasureOnPMFs([(1.0, p)])
        m2 = MeasureOnPMFs([(0.5, p), (0.5, q)])
        assert prohorov_distance(m1, m2) == pytest.approx(0.5, abs=1e-9)

    def test_measures_reject_explicit_ground(self):
        m = MeasureOnPMFs([(1.0, PMF([1.0, 0.0]))])
        with pytest.raises(InputError):
            prohorov_distance(m, m, ground=np.eye(1))

    def test_support_cap(self):
        k = 17
        w = np.full(k, 1.0 / k)
        with pytest.raises(ResourceError, match="cap 16"):
            prohorov_distance(PMF(w), PMF(w))

    def test_support_cap_env_override(self, monkeypatch):
        monkeypatch.setenv("ROWEX_SUPPORT_CAP", "17")
        k = 17
        w = np.full(k, 1.0 / k)
        assert prohorov_distance(PMF(w), PMF(w)) == 0.0

    def test_support_cap_argument_override(self):
        k = 17
        w = np.full(k, 1.0 / k)
        assert prohorov_distance(PMF(w), PMF(w), support_cap=17) == 0.0


class TestProhorovAgainstSlowOracle:
    def test_random_instances_match_reference(self):
        rng = np.random.default_rng(123)
        for _ in range(30):
            n = int(rng.integers(2, 6))
            dist = random_euclidean_metric(rng, n)
            w1 = random_weights(rng, n)
            w2 = random_weights(rng, n)
            got = prohorov_distance(PMF(w1), PMF(w2), dist)
            want = slow_prohorov(w1, w2, dist)
            assert got == pytest.approx(want, abs=2e-9)

    def test_discrete_metric_matches_subset_gap(self):
        rng = np.random.default_rng(321)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            w1 = random_weights(rng, n)
            w2 = random_weights(rng, n)
            got = prohorov_distance(PMF(w1), PMF(w2))
            assert got == pytest.approx(max_subset_gap(w1, w2), abs=1e-9)


class TestProhorovMetricAxioms:
    def test_axioms_on_random_instances(self):
        rng = np.random.default_rng(20240)
        for _ in range(60):
            n = int(rng.integers(2, 7))
            dist = random_euclidean_metric(rng, n)
            ps = [PMF(random_weights(rng, n)) for _ in range(3)]
            d01 = prohorov_distance(ps[0], ps[1], dist)
            d10 = prohorov_distance(ps[1], ps[0], dist)
            d02 = prohorov_distance(ps[0], ps[2], dist)
            d12 = prohorov_distance(ps[1], ps[2], dist)
            assert d01 >= 0.0
            assert abs(d01 - d10) <= 1e-9
            assert d02 <= d01 + d12 + 2e-9
            assert prohorov_distance(ps[0], ps[0], dist) <= 1e-9

    def test_dominated_by_total_variation(self):
        rng = np.random.default_rng(20241)
        for _ in range(60):
            n = int(rng.integers(2, 7))
            p = PMF(random_weights(rng, n))
            q = PMF(random_weights(rng, n))
            pi = prohorov_distance(p, q)
            tv = total_variation(p, q)
            assert pi <= tv + 1e-9
            assert abs(pi - tv) <= 1e-9  # discrete ground: equality


class TestMeasureFileLoading:
    def test_pmf_and_measure_detection(self, tmp_path):
        f1 = tmp_path / "p.json"
        f1.write_text(json.dumps({"weights": [0.5, 0.5]}))
        assert isinstance(load_measure_file(str(f1)), PMF)
        f2 = tmp_path / "m.json"
        f2.write_text(json.dumps({"atoms": [{"weight": 1.0, "pmf": [1.0, 0.0]}]}))
        assert isinstance(load_measure_file(str(f2)), MeasureOnPMFs)

    def test_bad_file(self, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{not json")
        with pytest.raises(InputError):
            load_measure_file(str(f))


@given(st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=6))
def test_empirical_distribution_matches_counts(counts):
    total = sum(counts)
    if total == 0:
        counts[0] = 1
        total = 1
    alphabet = Alphabet([f"s{i}" for i in range(len(counts))])
    row = [f"s{i}" for i, c in enumerate(counts) for _ in range(c)]
    p = empirical_row_distribution(alphabet, row)
    np.testing.assert_allclose(p.weights, np.array(counts) / total, rtol=0, atol=0)
