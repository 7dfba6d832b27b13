import numpy as np
import pytest

from diffkf.graph import (
    AdjacencyMatrix,
    GraphDimensionError,
    InvalidGraphError,
    NotStronglyConnectedError,
    diameter,
    kron_expand,
    matrix_power,
    min_hop_weight,
    validate,
)
from diffkf.verify import random_balanced_adjacency

RING3 = np.array([[1 / 3, 2 / 3, 0], [0, 1 / 3, 2 / 3], [2 / 3, 0, 1 / 3]])


def ring_with_self_loops(n, self_weight=0.5):
    return AdjacencyMatrix(self_weight * np.eye(n) + (1 - self_weight) * np.roll(np.eye(n), 1, axis=1))


class TestValidate:
    def test_three_sensor_ring(self):
        report = validate(AdjacencyMatrix(RING3))
        assert report.nonnegative and report.balanced and report.strongly_connected
        assert report.ok

    def test_identity_balanced_but_disconnected(self):
        report = validate(AdjacencyMatrix(np.eye(3)))
        assert report.balanced
        assert not report.strongly_connected
        assert report.failed_flags() == ["strongly_connected"]

    def test_unbalanced_columns(self):
        # Column sums are 0.9 and 1.1.
        report = validate(AdjacencyMatrix([[0.5, 0.5], [0.4, 0.6]]))
        assert not report.balanced
        assert report.nonnegative

    def test_non_square_rejected(self):
        with pytest.raises(GraphDimensionError):
            AdjacencyMatrix(np.ones((2, 3)))

    def test_validated_constructor_names_failure(self):
        with pytest.raises(InvalidGraphError, match="balanced"):
            AdjacencyMatrix.validated([[0.5, 0.5], [0.4, 0.6]])

    def test_weights_immutable(self):
        adj = AdjacencyMatrix(RING3)
        with pytest.raises(ValueError):
            adj.weights[0, 0] = 2.0


class TestDiameter:
    def test_three_sensor_ring(self):
        assert diameter(AdjacencyMatrix(RING3)) == 2

    def test_complete_graph(self):
        n = 4
        assert diameter(AdjacencyMatrix(np.full((n, n), 1 / n))) == 1

    def test_directed_four_cycle_with_self_loops(self):
        assert diameter(ring_with_self_loops(4)) == 3

    def test_disconnected_raises(self):
        with pytest.raises(NotStronglyConnectedError):
            diameter(AdjacencyMatrix(np.eye(3)))

    def test_single_node(self):
        assert diameter(AdjacencyMatrix([[1.0]])) == 0


class TestMatrixPower:
    def test_ring_squared_all_positive(self):
        squared = matrix_power(AdjacencyMatrix(RING3), 2)
        assert (squared > 0).all()

    def test_identity_any_power(self):
        for s in (1, 3, 7):
            np.testing.assert_array_equal(matrix_power(AdjacencyMatrix(np.eye(3)), s), np.eye(3))

    def test_ring_first_power_has_zero(self):
        first = matrix_power(AdjacencyMatrix(RING3), 1)
        assert first[0, 2] == 0.0

    def test_power_must_be_positive(self):
        with pytest.raises(ValueError):
            matrix_power(AdjacencyMatrix(RING3), 0)


class TestMinHopWeight:
    def test_three_sensor_ring(self):
        # A^2 entries are {1/9, 4/9}; the minimum is 1/9.
        assert min_hop_weight(AdjacencyMatrix(RING3)) == pytest.approx(1 / 9, rel=1e-14)

    def test_complete_uniform(self):
        n = 5
        assert min_hop_weight(AdjacencyMatrix(np.full((n, n), 1 / n))) == pytest.approx(1 / n)

    def test_four_cycle_binomial_oracle(self):
        # ((I + S) / 2)^3 expands to (I + 3S + 3S^2 + S^3) / 8 for the
        # cyclic shift S, so the minimum entry is 1/8.
        adj = ring_with_self_loops(4)
        shift = np.roll(np.eye(4), 1, axis=1)
        expected = (np.eye(4) + 3 * shift + 3 * shift @ shift + shift @ shift @ shift) / 8
        np.testing.assert_allclose(matrix_power(adj, 3), expected, atol=1e-15)
        assert min_hop_weight(adj) == pytest.approx(expected.min(), rel=1e-14)

    def test_disconnected_raises(self):
        with pytest.raises(NotStronglyConnectedError):
            min_hop_weight(AdjacencyMatrix(np.eye(2)))


class TestKronExpand:
    def test_single_node(self):
        np.testing.assert_array_equal(kron_expand(AdjacencyMatrix([[1.0]]), 3), np.eye(3))

    def test_ring_blocks(self):
        expanded = kron_expand(AdjacencyMatrix(RING3), 3)
        assert expanded.shape == (9, 9)
        for i in range(3):
            for j in range(3):
                np.testing.assert_array_equal(
                    expanded[3 * i : 3 * i + 3, 3 * j : 3 * j + 3], RING3[i, j] * np.eye(3)
                )

    def test_identity_times_identity(self):
        np.testing.assert_array_equal(kron_expand(AdjacencyMatrix(np.eye(2)), 2), np.eye(4))


class TestPowerProperties:
    """Structural facts about powers of balanced strongly connected graphs."""

    def graphs(self):
        rng = np.random.default_rng(42)
        out = [AdjacencyMatrix(RING3), ring_with_self_loops(5), AdjacencyMatrix(np.full((4, 4), 0.25))]
        out += [random_balanced_adjacency(rng, int(rng.integers(2, 7))) for _ in range(20)]
        return out

    def test_entries_dominated_by_min_hop_weight(self):
        for adj in self.graphs():
            floor = min_hop_weight(adj)
            assert floor > 0
            for s in range(diameter(adj), diameter(adj) + 4):
                power = matrix_power(adj, max(s, 1))
                assert power.min() >= floor - 1e-12

    def test_balance_preserved_under_powers(self):
        for adj in self.graphs():
            for s in range(1, 11):
                power = matrix_power(adj, s)
                np.testing.assert_allclose(power.sum(axis=0), 1.0, atol=1e-10)
                np.testing.assert_allclose(power.sum(axis=1), 1.0, atol=1e-10)

    def test_diameter_matches_first_positive_power(self):
        # For positive diagonals the diameter is the first power with no
        # zero entry; the BFS result is checked against that oracle.
        rng = np.random.default_rng(7)
        graphs = [ring_with_self_loops(n) for n in (2, 3, 5, 6)]
        for _ in range(10):
            graphs.append(random_balanced_adjacency(rng, int(rng.integers(2, 7))))
        for adj in graphs:
            if adj.weights.diagonal().min() <= 0:
                continue
            d = diameter(adj)
            if d == 0:
                continue
            assert (matrix_power(adj, d) > 0).all()
            if d > 1:
                assert (matrix_power(adj, d - 1) == 0).any()
