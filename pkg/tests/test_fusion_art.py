import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stemcovid.fusion_art import (
    CategoryNode,
    ChannelParams,
    ContractError,
    FusionField,
    choice_activation,
    readout,
    template_learn,
    template_match,
)

N_CASES = 1000

unit = st.floats(0.0, 1.0, allow_nan=False)


# multiples of 1/1024 keep every L1 sum exact in double precision
dyadic = st.integers(0, 1024).map(lambda i: i / 1024)


@st.composite
def pair(draw, max_len=12, elements=unit):
    n = draw(st.integers(1, max_len))
    x = draw(arrays(float, n, elements=elements))
    w = draw(arrays(float, n, elements=elements))
    return x, w


def p(alpha=0.0, gamma=1.0, **kw):
    return ChannelParams(alpha=alpha, gamma=gamma, **kw)


class TestChoice:
    def test_identity_two_channels(self):
        x = [np.array([0.2, 0.7]), np.array([1.0, 0.0, 0.3])]
        node = CategoryNode([v.copy() for v in x])
        assert choice_activation(x, node, [p(), p()]) == pytest.approx(2.0)

    def test_half(self):
        assert choice_activation([[0.5]], CategoryNode([np.array([1.0])]), [p()]) == 0.5

    def test_disjoint(self):
        assert choice_activation([[1.0, 0.0]], CategoryNode([np.array([0.0, 1.0])]), [p()]) == 0.0

    def test_mismatch_names_channel(self):
        node = CategoryNode([np.ones(2), np.ones(3)])
        with pytest.raises(ContractError, match="channel 1"):
            choice_activation([np.ones(2), np.ones(2)], node, [p(), p()])

    def test_empty_template_without_alpha(self):
        assert choice_activation([[0.3, 0.0]], CategoryNode([np.zeros(2)]), [p()]) == 0.0

    def test_zero_gamma_channel_ignored(self):
        node = CategoryNode([np.ones(2), np.ones(2)])
        got = choice_activation([np.ones(2), np.zeros(2)], node, [p(gamma=0.0), p()])
        assert got == 0.0

    @settings(max_examples=N_CASES, deadline=None)
    @given(pairs=st.lists(pair(), min_size=1, max_size=3), gammas=st.lists(unit, min_size=3, max_size=3),
           alpha=st.floats(0.0, 10.0))
    def test_bounded_by_gamma_sum(self, pairs, gammas, alpha):
        xs = [x for x, _ in pairs]
        node = CategoryNode([w for _, w in pairs])
        params = [ChannelParams(alpha=alpha, gamma=g) for g in gammas[: len(pairs)]]
        t = choice_activation(xs, node, params)
        assert 0.0 <= t <= sum(q.gamma for q in params) + 1e-12


class TestMatch:
    def test_identity(self):
        x = np.array([0.3, 0.9])
        assert template_match(x, x, 1.0) == (1.0, True)

    def test_contained(self):
        assert template_match([1, 0], [1, 1], 1.0)[0] == 1.0

    def test_half_not_resonant(self):
        assert template_match([1, 1], [1, 0], 0.9) == (0.5, False)

    def test_zero_input_matches(self):
        assert template_match([0, 0], [0.4, 0.1], 1.0) == (1.0, True)

    def test_mismatch(self):
        with pytest.raises(ContractError):
            template_match([1, 0], [1, 0, 0], 0.5)

    @settings(max_examples=N_CASES, deadline=None)
    @given(xw=pair(), rho=unit)
    def test_bounds_and_containment(self, xw, rho):
        x, w = xw
        m, ok = template_match(x, w, rho)
        assert 0.0 <= m <= 1.0 + 1e-12
        assert ok == (m >= rho)
        if np.all(x <= w):
            assert m == pytest.approx(1.0)

    @settings(max_examples=N_CASES, deadline=None)
    @given(xw=st.one_of(pair(elements=dyadic), pair(elements=dyadic).map(lambda t: (np.minimum(*t), t[1]))))
    def test_perfect_vigilance_is_containment(self, xw):
        x, w = xw
        overlap = np.minimum(x, w).sum()
        _, ok = template_match(x, w, 1.0)
        # under rho = 1, resonance exactly means x fits inside w
        assert ok == (bool(np.all(x <= w)) and overlap == x.sum())


class TestLearn:
    def test_zero_rate(self):
        w = np.array([0.4, 1.0])
        np.testing.assert_array_equal(template_learn(w, [0.0, 0.0], 0.0), w)

    def test_fast(self):
        np.testing.assert_array_equal(template_learn(np.ones(2), [1.0, 0.0], 1.0), [1.0, 0.0])

    def test_midpoint(self):
        np.testing.assert_allclose(template_learn(np.array([1.0]), [0.0], 0.5), [0.5])

    def test_does_not_mutate(self):
        w = np.ones(3)
        template_learn(w, np.zeros(3), 1.0)
        np.testing.assert_array_equal(w, np.ones(3))

    def test_bad_rate(self):
        with pytest.raises(ContractError):
            template_learn(np.ones(1), [0.5], 1.5)

    @settings(max_examples=N_CASES, deadline=None)
    @given(xw=pair(), beta=unit)
    def test_monotone_erosion(self, xw, beta):
        x, w = xw
        assert np.all(template_learn(w, x, beta) <= w + 1e-12)

    @settings(max_examples=N_CASES, deadline=None)
    @given(xw=pair())
    def test_fast_learning_idempotent(self, xw):
        x, w = xw
        once = template_learn(w, x, 1.0)
        np.testing.assert_array_equal(template_learn(once, x, 1.0), once)


class TestReadout:
    def test_copy(self):
        node = CategoryNode([np.array([1.0, 0.0, 1.0])])
        out = readout(node, 0)
        np.testing.assert_array_equal(out, [1, 0, 1])
        out[0] = 0.0
        assert node.weights[0][0] == 1.0

    def test_uncommitted_all_ones(self):
        np.testing.assert_array_equal(readout(CategoryNode.uncommitted([3]), 0), np.ones(3))

    def test_after_learning(self):
        node = CategoryNode.uncommitted([3])
        node.weights[0] = template_learn(node.weights[0], [0, 1, 1], 1.0)
        np.testing.assert_array_equal(readout(node, 0), [0, 1, 1])

    def test_unknown_channel(self):
        with pytest.raises(ContractError):
            readout(CategoryNode.uncommitted([2]), 1)


class TestParams:
    def test_defaults(self):
        q = ChannelParams()
        assert (q.alpha, q.beta, q.gamma, q.rho) == (0.001, 1.0, 1.0, 1.0)

    @pytest.mark.parametrize("kw", [{"alpha": -1}, {"beta": 2}, {"gamma": -0.1}, {"rho": 1.1}])
    def test_construction_rejects(self, kw):
        with pytest.raises(ContractError):
            ChannelParams(**kw)

    def test_mutation_rejects(self):
        q = ChannelParams()
        with pytest.raises(ContractError):
            q.rho = 3.0


class TestField:
    def test_commit_stores_input(self):
        f = FusionField([2, 1], [ChannelParams(), ChannelParams()])
        j = f.learn([np.array([0.2, 0.9]), np.array([1.0])])
        assert j == 0
        np.testing.assert_allclose(f.nodes[0].weights[0], [0.2, 0.9])
        assert f.nodes[0].committed

    def test_same_input_resonates_with_existing(self):
        f = FusionField([2], [ChannelParams()])
        f.learn([np.array([1.0, 0.0])])
        assert f.learn([np.array([1.0, 0.0])]) == 0
        assert f.learn([np.array([0.0, 1.0])]) == 1
        assert len(f.nodes) == 2

    def test_ties_follow_creation_order(self):
        f = FusionField([2], [ChannelParams()])
        f.nodes = [CategoryNode([np.ones(2)], True), CategoryNode([np.ones(2)], True)]
        assert f.resonance_search([np.array([0.5, 0.5])]) == 0

    def test_rejects_out_of_range_activity(self):
        f = FusionField([1], [ChannelParams()])
        with pytest.raises(ContractError):
            f.learn([np.array([1.5])])

    def test_dimension_mismatch(self):
        f = FusionField([2], [ChannelParams()])
        with pytest.raises(ContractError, match="channel 0"):
            f.activations([np.ones(3)])
