import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsap.errors import InvalidArgument, ValidationError
from fracsap.noise import (LevySpec, NoisePath, big_jump_intensity, derive_seed, levy_values,
                           sample_path, small_jump_compensator)


def atoms_spec(atoms, Q=(0.0,), dim=1):
    return LevySpec.from_atoms(dim, (0.0,) * dim, Q, atoms)


class TestSpec:
    @pytest.mark.parametrize("kw", [
        dict(dim=1, drift=(0.0,), Q_diag=(-1.0,)),
        dict(dim=1, drift=(0.0,), Q_diag=(math.inf,)),
        dict(dim=1, drift=(0.0, 0.0), Q_diag=(1.0,)),
        dict(dim=1, drift=(0.0,), Q_diag=(1.0,), marks=((0.0,),), rates=(1.0,)),
        dict(dim=1, drift=(0.0,), Q_diag=(1.0,), marks=((1.0,),), rates=(0.0,)),
        dict(dim=1, drift=(0.0,), Q_diag=(1.0,), marks=((1.0, 2.0),), rates=(1.0,)),
        dict(dim=0, drift=(), Q_diag=()),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            LevySpec(**kw)

    def test_trace(self):
        assert LevySpec(3, (0, 0, 0), (1.0, 0.5, 0.25)).trace_Q == 1.75


class TestIntensity:
    def test_no_atoms(self):
        assert big_jump_intensity(atoms_spec([])) == 0.0

    def test_single(self):
        assert big_jump_intensity(atoms_spec([((3.0,), 2.0)])) == 2.0

    def test_threshold_inclusive(self):
        s = atoms_spec([((0.5,), 7.0), ((1.0,), 1.5), ((2.0,), 0.5)])
        assert big_jump_intensity(s) == 2.0
        assert list(s.big_mask()) == [False, True, True]

    def test_vector_mark_norm(self):
        s = LevySpec.from_atoms(2, (0, 0), (0, 0), [((0.6, 0.8), 1.0), ((0.6, 0.7), 3.0)])
        assert big_jump_intensity(s) == 1.0


class TestCompensator:
    def test_no_small(self):
        s = atoms_spec([((3.0,), 2.0)])
        assert np.array_equal(small_jump_compensator(s, lambda u: np.array([1.0, 2.0])), [0.0, 0.0])

    def test_single(self):
        s = atoms_spec([((0.5,), 3.0)])
        v = np.array([0.2, -1.0])
        assert np.allclose(small_jump_compensator(s, lambda u: v), 3 * v)

    def test_linear_integrand_against_monte_carlo(self):
        s = atoms_spec([((0.3,), 2.0), ((-0.6,), 1.0), ((2.0,), 1.0)])
        F = lambda u: 2.0 * u
        comp = small_jump_compensator(s, F)
        assert comp == pytest.approx(2 * 2.0 * 0.3 + 1.0 * 2.0 * -0.6)
        T = 2.0
        grid = np.array([0.0, T])
        marks = s.mark_array()
        sums = []
        for seed in range(10_000):
            nz = sample_path(s, grid, seed)
            small = ~s.big_mask()[nz.jump_atoms]
            sums.append(sum(F(marks[k]) for k in nz.jump_atoms[small]).sum() if small.any() else 0.0)
        sums = np.asarray(sums)
        se = sums.std(ddof=1) / math.sqrt(sums.size)
        assert abs(sums.mean() / T - comp[0]) <= 3 * se / T

    def test_centering(self):
        s = atoms_spec([((0.5,), 2.0), ((-0.25,), 4.0)])
        T = 1.5
        comp = small_jump_compensator(s, lambda u: np.sin(3 * u))[0]
        marks = s.mark_array()[:, 0]
        vals = np.array([np.sin(3 * marks[sample_path(s, [0.0, T], seed).jump_atoms]).sum() - T * comp
                         for seed in range(10_000)])
        assert abs(vals.mean()) <= 3 * vals.std(ddof=1) / math.sqrt(vals.size)


class TestSamplePath:
    def test_degenerate(self):
        nz = sample_path(atoms_spec([]), np.linspace(0, 1, 11), 5)
        assert not nz.dw.any() and nz.jump_times.size == 0

    def test_poisson_mean(self):
        s = atoms_spec([((3.0,), 2.0)])
        counts = np.array([sample_path(s, [0.0, 10.0], seed).jump_times.size for seed in range(10_000)])
        assert abs(counts.mean() - 20.0) <= 3 * math.sqrt(20.0) / 100
        # the sample variance of Poisson(m) counts has variance (m + 2 m^2) / n
        assert abs(counts.var(ddof=1) - 20.0) <= 3 * math.sqrt((20.0 + 2 * 20.0 ** 2) / 10_000)

    def test_wiener_variance(self):
        s = LevySpec(1, (0.0,), (1.0,))
        dw = np.array([sample_path(s, [0.0, 1.0], seed).dw[0, 0] for seed in range(10_000)])
        assert 0.94 <= dw.var(ddof=1) <= 1.06

    def test_per_step_variance_follows_grid(self):
        s = LevySpec(2, (0.0, 0.0), (4.0, 0.25))
        grid = np.concatenate([np.linspace(0, 1, 1001), 1 + np.linspace(0, 2, 101)[1:]])
        dws = np.concatenate([sample_path(s, grid, seed).dw for seed in range(200)])
        dt = np.tile(np.diff(grid), 200)
        z = dws / np.sqrt(dt)[:, None]
        assert np.allclose(z.var(axis=0), [4.0, 0.25], rtol=0.05)

    def test_reproducible(self):
        s = atoms_spec([((0.5,), 2.0), ((1.5,), 0.5)], Q=(1.0,))
        g = np.linspace(0, 5, 101)
        a, b = sample_path(s, g, 42), sample_path(s, g, 42)
        for f in ("dw", "jump_times", "jump_atoms"):
            assert np.array_equal(getattr(a, f), getattr(b, f))

    def test_adding_an_atom_keeps_others(self):
        g = np.linspace(0, 5, 51)
        a = sample_path(atoms_spec([((0.5,), 2.0)], Q=(1.0,)), g, 3)
        b = sample_path(atoms_spec([((0.5,), 2.0), ((2.0,), 1.0)], Q=(1.0,)), g, 3)
        assert np.array_equal(a.dw, b.dw)
        assert np.array_equal(a.jump_times, b.jump_times[b.jump_atoms == 0])

    def test_seed_independence(self):
        s = LevySpec(1, (0.0,), (1.0,))
        g = np.linspace(0, 1, 1001)
        for seed in (0, 7, 123456789):
            a = sample_path(s, g, seed).dw[:, 0]
            b = sample_path(s, g, seed + 1).dw[:, 0]
            assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_events_sorted_inside_horizon(self):
        s = atoms_spec([((0.5,), 20.0), ((1.5,), 5.0)])
        nz = sample_path(s, np.linspace(0, 3, 31), 11)
        assert np.all(np.diff(nz.jump_times) >= 0)
        assert np.all((nz.jump_times > 0) & (nz.jump_times <= 3.0))

    @pytest.mark.parametrize("grid", [[0.0], [0.1, 1.0], [0.0, 1.0, 1.0], [0.0, math.nan]])
    def test_bad_grid(self, grid):
        with pytest.raises(InvalidArgument):
            sample_path(LevySpec(1, (0.0,), (1.0,)), grid, 0)

    def test_truncate(self):
        s = atoms_spec([((0.5,), 5.0)], Q=(1.0,))
        nz = sample_path(s, np.linspace(0, 2, 21), 1)
        tr = nz.truncate(10)
        assert tr.horizon == nz.grid[10]
        assert np.all(tr.jump_times <= nz.grid[10])
        assert np.array_equal(tr.dw, nz.dw[:10])


class TestSeeds:
    def test_deterministic(self):
        assert derive_seed(5, 3) == derive_seed(5, 3)

    @settings(max_examples=50)
    @given(st.integers(0, 2 ** 63), st.integers(0, 10_000))
    def test_distinct_per_index(self, master, i):
        assert derive_seed(master, i) != derive_seed(master, i + 1)
        assert 0 <= derive_seed(master, i) < 2 ** 64


class TestLevyValues:
    def test_decomposition(self):
        s = LevySpec.from_atoms(1, (0.5,), (0.0,), [((0.5,), 2.0), ((1.5,), 1.0)])
        g = np.linspace(0, 4, 41)
        nz = NoisePath(g, np.zeros((40, 1)), np.array([1.05, 2.0]), np.array([0, 1]))
        L = levy_values(s, nz)[:, 0]
        # drift 0.5 t minus compensator 2 * 0.5 t, plus jumps 0.5 at 1.05 and 1.5 at 2.0
        expect = 0.5 * g - 1.0 * g + 0.5 * (g >= 1.05) + 1.5 * (g >= 2.0)
        assert np.allclose(L, expect, atol=1e-14)
