import pytest

from harqnp import verify
from harqnp.codes import BinaryLinearCode
from harqnp.decoders import minimum_distance


class TestFixtures:
    def test_tree_codes_are_cycle_free(self):
        for H in verify.TREE_CODES:
            m, n = H.shape
            # a connected Tanner graph is a tree when edges = nodes - 1
            assert H.sum() == m + n - 1

    def test_random_code_distance(self):
        code = verify.random_code(8, 3, 5, min_distance=3)
        assert code.k == 3 and minimum_distance(code.codebook) >= 3

    def test_random_code_failure(self):
        with pytest.raises(RuntimeError):
            verify.random_code(4, 3, 0, min_distance=4)

    def test_hamming(self):
        code = BinaryLinearCode.from_parity(verify.HAMMING74)
        assert code.k == 4 and minimum_distance(code.codebook) == 3


class TestReferences:
    def test_brute_terror(self):
        assert verify.brute_terror(0, 1, 2, 0.1) == pytest.approx(0.99)
        assert verify.brute_terror(2, 1, 3, 0.1) == 0.0

    def test_tabulation_sums(self, repetition):
        table = verify.tabulate_ml_success(repetition.codebook, 0.2, 0)
        # with no prefix the entries are the unconditional success probabilities
        assert float(table[((), 0)]) == pytest.approx(0.8**3 + 3 * 0.2 * 0.8**2)

    def test_binomial_table(self):
        assert verify.binomial_pmf_table(5, 0.3).sum() == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["terror", "coset", "ml_enumeration", "tree_map"])
def test_fast_suites_pass(name):
    result = verify.SUITES[name]()
    assert result.passed, result.line()


def test_run_all_quick():
    results = verify.run_all(["ml_cdf", "bd_mc"], quick=True)
    assert all(r.passed for r in results), [r.line() for r in results]
    assert results[0].line().startswith("PASS")
