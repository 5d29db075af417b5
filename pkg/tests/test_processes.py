"""Process specs, generators, coefficient maps and samplers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duality_lab import algebra
from duality_lab.processes import (
    bep,
    diffusion_endpoints,
    drift_diffusion,
    enumerate_states,
    generator_matrix,
    kingman_block,
    moran_multitype,
    path_rng,
    sample_diffusion,
    sample_jump,
    sip,
    stepping_stone_dual,
    stepping_stone_forward,
    wf_general_1d,
    wf_multitype,
)


class TestSpecValidation:
    def test_accepts_the_three_named_coefficient_sets(self):
        wf_general_1d({1: 1.0, 2: -1.0})
        wf_general_1d({1: 1.0, 2: -1.0}, {0: 0.7, 1: -0.7})
        wf_general_1d({1: 1.0, 2: -1.0}, {1: -0.4, 2: 0.4})

    def test_rejects_negative_alpha_one(self):
        with pytest.raises(ValueError):
            wf_general_1d({1: -1.0, 2: 1.0})

    def test_rejects_unbalanced_coefficients(self):
        with pytest.raises(ValueError):
            wf_general_1d({1: 1.0, 2: -0.5})
        with pytest.raises(ValueError):
            wf_general_1d({1: 1.0, 2: -1.0}, {0: 0.7, 1: -0.3})

    def test_rejects_bad_kernels(self):
        with pytest.raises(ValueError):
            stepping_stone_dual(((0.5, 0.6), (0.5, 0.5)))
        with pytest.raises(ValueError):
            stepping_stone_dual(((1.0, -0.1), (0.5, 0.5)))
        with pytest.raises(ValueError):
            stepping_stone_forward(np.full((17, 17), 1.0 / 17.0))

    def test_parameter_bounds(self):
        with pytest.raises(ValueError):
            sip(1, 1.0)
        with pytest.raises(ValueError):
            bep(3, -0.5)
        with pytest.raises(ValueError):
            moran_multitype(3, 2, -1.0)
        with pytest.raises(ValueError):
            kingman_block(theta=-0.1)


class TestEnumerateStates:
    def test_conserved_two_sites(self):
        idx = enumerate_states(2, 2, "conserved")
        assert idx.states == ((0, 2), (1, 1), (2, 0))

    def test_conserved_counts_stars_and_bars(self):
        assert len(enumerate_states(3, 2, "conserved")) == 6

    def test_down_closed_two_sites(self):
        idx = enumerate_states(2, 1, "down-closed")
        assert set(idx.states) == {(0, 0), (1, 0), (0, 1)}

    def test_bijection(self):
        idx = enumerate_states(3, 4, "down-closed")
        for i, s in enumerate(idx.states):
            assert idx.pos[s] == i

    def test_overflow_guard(self):
        with pytest.raises(ValueError):
            enumerate_states(8, 60, "conserved")


class TestGeneratorMatrix:
    def test_sip_exit_rates_from_singles(self):
        gen = generator_matrix(sip(2, 0.0), truncation=2)
        i = gen.index.pos[(1, 1)]
        assert gen.Q[i, i] == pytest.approx(-1.0)
        assert gen.Q[i, gen.index.pos[(2, 0)]] == pytest.approx(0.5)
        assert gen.Q[i, gen.index.pos[(0, 2)]] == pytest.approx(0.5)

    def test_block_counting_pure_coalescence(self):
        gen = generator_matrix(kingman_block(n_max=5))
        row = gen.Q[gen.index.pos[(3,)]]
        want = np.zeros(6)
        want[gen.index.pos[(2,)]] = 6.0
        want[gen.index.pos[(3,)]] = -6.0
        assert np.allclose(row, want)

    def test_block_counting_mutation_and_selection(self):
        gen = generator_matrix(kingman_block(theta=0.5, sigma=0.25, n_max=10))
        n = 4
        row = gen.Q[gen.index.pos[(n,)]]
        assert row[gen.index.pos[(n - 1,)]] == pytest.approx(n * (n - 1) + 0.5 * n)
        assert row[gen.index.pos[(n + 1,)]] == pytest.approx(0.25 * n)
        # the up-rate is switched off at the boundary
        top = gen.Q[gen.index.pos[(10,)]]
        assert top.sum() == pytest.approx(0.0)
        assert top[gen.index.pos[(9,)]] == pytest.approx(10 * 9 + 0.5 * 10)

    def test_moment_dual_of_neutral_diffusion(self):
        gen = generator_matrix(wf_general_1d({1: 1.0, 2: -1.0}), truncation=6)
        row = gen.Q[gen.index.pos[(3,)]]
        assert row[gen.index.pos[(2,)]] == pytest.approx(6.0)
        assert row[gen.index.pos[(3,)]] == pytest.approx(-6.0)

    def test_moment_dual_with_selection_matches_block_counting(self):
        sigma = 0.4
        via_coeffs = generator_matrix(
            wf_general_1d({1: 1.0, 2: -1.0}, {1: -sigma, 2: sigma}), truncation=12
        )
        direct = generator_matrix(kingman_block(sigma=sigma, n_max=12))
        assert np.abs(via_coeffs.Q - direct.Q).max() <= 1e-12

    def test_rows_sum_to_zero_and_offdiagonals_nonneg(self):
        gens = [
            generator_matrix(sip(3, 1.7), truncation=4),
            generator_matrix(moran_multitype(5, 3, 0.9)),
            generator_matrix(kingman_block(theta=0.2, sigma=0.1, n_max=20)),
            generator_matrix(stepping_stone_dual(((0.2, 0.5, 0.3), (0.1, 0.3, 0.6), (0.4, 0.4, 0.2))), truncation=3),
        ]
        for gen in gens:
            off = gen.Q.copy()
            np.fill_diagonal(off, 0.0)
            assert off.min() >= 0.0
            assert np.abs(gen.Q.sum(axis=1)).max() <= 1e-12 * max(1.0, np.abs(gen.Q).max())

    def test_sip_conserves_total_particle_number(self):
        # scan nonzeros over the down-closed enumeration: no transition
        # changes the total
        idx = enumerate_states(2, 4, "down-closed")
        gen = generator_matrix(sip(2, 1.3), index=idx)
        for i, s in enumerate(idx.states):
            for j, tgt in enumerate(idx.states):
                if i != j and gen.Q[i, j] != 0.0:
                    assert sum(s) == sum(tgt)

    def test_stepping_stone_dual_rates(self):
        kern = ((0.2, 0.8), (0.6, 0.4))
        gen = generator_matrix(stepping_stone_dual(kern), truncation=3)
        row = gen.Q[gen.index.pos[(2, 1)]]
        # migration uses both kernel directions, coalescence n_i(n_i - 1)
        assert row[gen.index.pos[(1, 2)]] == pytest.approx(2 * (0.8 + 0.6))
        assert row[gen.index.pos[(3, 0)]] == pytest.approx(1 * (0.8 + 0.6))
        assert row[gen.index.pos[(1, 1)]] == pytest.approx(2 * 1)
        assert row[gen.index.pos[(2, 0)]] == pytest.approx(0.0)


class TestIdentificationLemmas:
    @pytest.mark.parametrize("m,d,N", [(0.0, 2, 2), (1.3, 3, 4), (2.0, 2, 6), (0.7, 4, 3)])
    def test_sip_equals_moran_under_coordinate_identification(self, m, d, N):
        theta = m * (d - 1) / 4.0
        full = generator_matrix(sip(d, m), truncation=N)
        reduced = generator_matrix(moran_multitype(N, d, theta))
        perm = [full.index.pos[k + (N - sum(k),)] for k in reduced.index.states]
        assert np.abs(full.Q[np.ix_(perm, perm)] - reduced.Q).max() <= 1e-12

    @pytest.mark.parametrize("m,d", [(0.0, 2), (0.0, 3), (1.5, 3), (2.4, 2), (0.9, 5)])
    def test_bep_equals_wf_on_the_simplex(self, m, d):
        theta = m * (d - 1) / 4.0
        rng = np.random.default_rng(17)
        for _ in range(100):
            x = rng.dirichlet(np.ones(d))
            b_full, a_full = drift_diffusion(bep(d, m), x)
            b_red, a_red = drift_diffusion(wf_multitype(d, theta), x[:-1])
            assert np.abs(a_full[: d - 1, : d - 1] - a_red).max() <= 1e-12
            assert np.abs(b_full[: d - 1] - b_red).max() <= 1e-12

    @pytest.mark.parametrize("m", [1.0, 2.5])
    def test_su11_ladder_construction_reproduces_sip(self, m):
        # the generator assembled from per-site raising/lowering/number
        # matrices equals the rate-built inclusion process on the sector
        N = 4
        rep = algebra.build_representation("su11-discrete", N, m=m)
        Kp, Km, K0 = rep.ops["raise"], rep.ops["lower"], rep.ops["number"]
        eye = np.eye(N + 1)
        L = 0.5 * (
            np.kron(Kp, Km)
            + np.kron(Km, Kp)
            - 2.0 * np.kron(K0, K0)
            + (m * m / 8.0) * np.kron(eye, eye)
        )
        gen = generator_matrix(sip(2, m), truncation=N)
        flat = {(a, b): a * (N + 1) + b for a in range(N + 1) for b in range(N + 1)}
        sel = [flat[s] for s in gen.index.states]
        assert np.abs(L[np.ix_(sel, sel)] - gen.Q).max() <= 1e-12


class TestDriftDiffusion:
    def test_wf_two_types_neutral(self):
        b, a = drift_diffusion(wf_multitype(2, 0.0), (0.3,))
        assert a[0, 0] == pytest.approx(0.21)
        assert b[0] == 0.0

    def test_wf_mutation_drift(self):
        theta, d = 0.9, 3
        x = (0.2, 0.3)
        b, _ = drift_diffusion(wf_multitype(d, theta), x)
        want = (theta / (d - 1)) * (1.0 - d * np.asarray(x))
        assert np.allclose(b, want)

    def test_neutral_boundary_is_absorbing(self):
        spec = wf_general_1d({1: 1.0, 2: -1.0})
        for x in (0.0, 1.0):
            b, a = drift_diffusion(spec, x)
            assert a[0, 0] == pytest.approx(0.0)
            assert b[0] == pytest.approx(0.0)

    def test_general_1d_doubles_alpha(self):
        spec = wf_general_1d({1: 1.0, 2: -1.0}, {0: 0.5, 1: -0.5})
        b, a = drift_diffusion(spec, 0.25)
        assert a[0, 0] == pytest.approx(2 * (0.25 - 0.0625))
        assert b[0] == pytest.approx(0.5 * 0.75)

    def test_rejects_non_psd_state(self):
        with pytest.raises(ValueError):
            drift_diffusion(wf_multitype(2, 0.0), (1.5,))

    def test_stepping_stone_coefficients(self):
        kern = ((0.0, 1.0), (1.0, 0.0))
        b, a = drift_diffusion(stepping_stone_forward(kern), (0.25, 0.75))
        assert np.allclose(np.diag(a), [2 * 0.25 * 0.75] * 2)
        assert b[0] == pytest.approx(2 * (0.75 - 0.25))
        assert b[1] == pytest.approx(2 * (0.25 - 0.75))


class TestSampleJump:
    def test_zero_horizon(self):
        assert sample_jump(sip(2, 0.0), (1, 1), 0.0, path_rng(1, 0)) == (1, 1)

    def test_absorbing_state(self):
        spec = kingman_block(n_max=6)
        assert sample_jump(spec, (1,), 50.0, path_rng(1, 1)) == (1,)

    def test_deterministic_given_stream(self):
        spec = sip(2, 1.0)
        a = [sample_jump(spec, (3, 1), 0.7, path_rng(9, i)) for i in range(50)]
        b = [sample_jump(spec, (3, 1), 0.7, path_rng(9, i)) for i in range(50)]
        assert a == b

    def test_survival_probability_matches_exponential(self):
        # two singles: total exit rate one, so survival is e^{-t}
        spec = sip(2, 0.0)
        n, t = 20000, 1.0
        hits = sum(
            1 for i in range(n) if sample_jump(spec, (1, 1), t, path_rng(123, i)) == (1, 1)
        )
        p_hat = hits / n
        se = math.sqrt(p_hat * (1 - p_hat) / n)
        assert abs(p_hat - math.exp(-1.0)) <= 3 * se


class TestSampleDiffusion:
    def test_zero_horizon(self):
        out = sample_diffusion(wf_multitype(2, 0.0), (0.3,), 0.0, 1e-3, path_rng(0, 0))
        assert np.array_equal(out, [0.3])

    def test_absorbing_corner(self):
        out = sample_diffusion(wf_multitype(2, 0.0), (1.0,), 0.5, 1e-3, path_rng(0, 1))
        assert np.array_equal(out, [1.0])

    def test_step_validation(self):
        with pytest.raises(ValueError):
            sample_diffusion(wf_multitype(2, 0.0), (0.3,), 0.5, 0.5, path_rng(0, 0))
        with pytest.raises(ValueError):
            sample_diffusion(wf_multitype(2, 0.0), (0.3,), 0.5, -0.1, path_rng(0, 0))

    def test_stays_on_the_simplex(self):
        spec = wf_multitype(3, 0.4)
        ends = diffusion_endpoints(spec, (0.5, 0.3), 0.4, 5e-3, seed=5, n_paths=64)
        assert np.all(ends >= 0.0)
        assert np.all(ends.sum(axis=1) <= 1.0 + 1e-12)

    def test_bep_conserves_total_energy(self):
        spec = bep(3, 1.0)
        ends = diffusion_endpoints(spec, (0.2, 0.3, 0.5), 0.3, 5e-3, seed=6, n_paths=64)
        assert np.all(ends >= 0.0)
        assert np.abs(ends.sum(axis=1) - 1.0).max() <= 1e-10

    def test_heterozygosity_decay(self):
        # the mean of x(1-x) decays at unit rate under the half-scaled
        # neutral generator, independent oracle 0.21 e^{-1/2}
        spec = wf_multitype(2, 0.0)
        ends = diffusion_endpoints(spec, (0.3,), 0.5, 1e-3, seed=77, n_paths=10000)
        vals = ends[:, 0] * (1.0 - ends[:, 0])
        mean = vals.mean()
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        want = 0.21 * math.exp(-0.5)
        assert abs(mean - want) <= 3 * se + 5e-3

    def test_batch_matches_single_paths(self):
        spec = wf_multitype(2, 0.5)
        ends = diffusion_endpoints(spec, (0.3,), 0.25, 1e-2, seed=42, n_paths=100)
        singles = np.stack(
            [sample_diffusion(spec, (0.3,), 0.25, 1e-2, path_rng(42, i)) for i in range(100)]
        )
        assert np.array_equal(ends, singles)

    def test_block_partition_invariance(self):
        spec = wf_multitype(2, 0.5)
        a = diffusion_endpoints(spec, (0.3,), 0.25, 1e-2, seed=42, n_paths=100, block=7)
        b = diffusion_endpoints(spec, (0.3,), 0.25, 1e-2, seed=42, n_paths=100, block=100)
        assert np.array_equal(a, b)

    def test_antithetic_pairs_mirror_increments(self):
        spec = wf_multitype(2, 0.8)
        ends = diffusion_endpoints(spec, (0.5,), 0.2, 1e-2, seed=9, n_paths=4, antithetic=True)
        assert not np.array_equal(ends[0], ends[1])
        with pytest.raises(ValueError):
            diffusion_endpoints(spec, (0.5,), 0.2, 1e-2, seed=9, n_paths=5, antithetic=True)

    def test_partial_trailing_step(self):
        spec = wf_multitype(2, 0.0)
        out = sample_diffusion(spec, (0.4,), 0.25, 1e-1, path_rng(3, 0))
        assert out.shape == (1,)
        assert 0.0 <= out[0] <= 1.0


class TestGeneratorProperties:
    @settings(max_examples=25, deadline=None)
    @given(
        d=st.integers(2, 3),
        N=st.integers(1, 5),
        m=st.floats(0.0, 4.0, allow_nan=False),
        theta=st.floats(0.0, 2.0, allow_nan=False),
    )
    def test_random_generators_are_conservative(self, d, N, m, theta):
        for gen in (
            generator_matrix(sip(d, m), truncation=N),
            generator_matrix(moran_multitype(N, d, theta)),
        ):
            off = gen.Q.copy()
            np.fill_diagonal(off, 0.0)
            assert off.min() >= 0.0
            assert np.abs(gen.Q.sum(axis=1)).max() <= 1e-12 * max(1.0, np.abs(gen.Q).max())
