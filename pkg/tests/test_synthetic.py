import numpy as np
import pytest

from tkrr.datasets import StudyConfig, load_csv
from tkrr.synthetic import (
    EXAMPLES,
    SimSpec,
    gen_scenario,
    gen_study,
    gen_test,
    gen_true_function,
    scenario_to_csv,
)
from tkrr.rng import philox_stream

N_CASES = 100


class TestTrueFunctions:
    def test_frozen_point_values(self):
        # hand-computed: sin(1.5*pi) = -1 and the kink term vanishes at 0.5
        f1 = gen_true_function("ex1", 0.0)
        assert f1(np.array([[0.5]]))[0] == pytest.approx(-4.5, abs=1e-12)
        f2 = gen_true_function("ex2", 0.0)
        assert f2(np.array([[0.5, 0.0, 0.0]]))[0] == pytest.approx(-2.0, abs=1e-12)
        f3 = gen_true_function("ex3", 0.0)
        assert f3(np.zeros((1, 10)))[0] == pytest.approx(0.5, abs=1e-12)

    def test_shift_moves_only_the_kink(self):
        x = np.array([[0.2]])
        base = gen_true_function("ex1", 0.0)(x)[0]
        shifted = gen_true_function("ex1", 0.1)(x)[0]
        # sin part identical, kink differs: delta = -1.5(e^{|x-s-.5|} - e^{|x-.5|})
        expect = -1.5 * (np.exp(abs(0.2 - 0.1 - 0.5)) - np.exp(abs(0.2 - 0.5)))
        assert shifted - base == pytest.approx(expect, abs=1e-12)

    def test_modified_examples_share_base_function(self):
        x = np.random.default_rng(0).random((5, 3))
        np.testing.assert_array_equal(
            gen_true_function("ex2", 0.1)(x), gen_true_function("ex2mod", 0.1)(x)
        )

    def test_unknown_example(self):
        with pytest.raises(ValueError):
            gen_true_function("ex9", 0.0)


class TestSimSpec:
    def test_defaults_per_example(self):
        assert (SimSpec("ex1").n0, SimSpec("ex1").n_k) == (200, 150)
        for ex in ("ex2", "ex3", "ex2mod", "ex3mod"):
            assert (SimSpec(ex).n0, SimSpec(ex).n_k) == (600, 300)

    def test_dimensions_and_noise(self):
        assert (SimSpec("ex1").d, SimSpec("ex1").sigma) == (1, 0.4)
        assert (SimSpec("ex2").d, SimSpec("ex2").sigma) == (3, 0.3)
        assert SimSpec("ex3").d == 10

    def test_modified_adds_three_sources(self):
        assert SimSpec("ex2", m=5).total_sources == 5
        assert SimSpec("ex2mod", m=5).total_sources == 8
        assert SimSpec("ex3mod", m=0).total_sources == 3

    def test_modified_needs_headroom_for_negative_shifts(self):
        with pytest.raises(ValueError):
            SimSpec("ex2mod", s=0.4)
        SimSpec("ex2", s=0.4)  # unmodified designs have no such cap

    def test_fixed_shift_length_checked(self):
        with pytest.raises(ValueError):
            SimSpec("ex1", m=3, fixed_shifts=(0.1,))

    def test_basic_validation(self):
        with pytest.raises(ValueError):
            SimSpec("ex1", s=-0.1)
        with pytest.raises(ValueError):
            SimSpec("ex1", m=-1)
        with pytest.raises(ValueError):
            SimSpec("ex1", n0=0)


class TestGeneration:
    def test_shapes(self):
        spec = SimSpec("ex2", s=0.2, m=4, n0=50, n_k=30, n_te=70)
        target, sources, fn, shifts = gen_scenario(spec, seed=5)
        assert (target.n, target.d) == (50, 3)
        assert len(sources) == 4 and all(s.n == 30 for s in sources)
        x, f0 = gen_test(spec, fn, seed=5)
        assert x.shape == (70, 3) and f0.shape == (70,)

    def test_target_noise_level(self):
        spec = SimSpec("ex1", s=0.0, m=0, n0=4000)
        target, _, fn, _ = gen_scenario(spec, seed=9)
        resid = target.y - fn(target.x)
        assert abs(resid.std() - 0.4) < 0.02

    def test_test_set_is_noiseless_and_reproducible(self):
        spec = SimSpec("ex1", s=0.1, m=2)
        _, _, fn, _ = gen_scenario(spec, seed=11)
        x1, f1 = gen_test(spec, fn, seed=11)
        x2, f2 = gen_test(spec, fn, seed=11)
        assert np.array_equal(x1, x2) and np.array_equal(f1, f2)
        np.testing.assert_array_equal(f1, fn(x1))

    def test_deterministic_by_seed(self):
        spec = SimSpec("ex1", s=0.3, m=3)
        a = gen_scenario(spec, seed=21)
        b = gen_scenario(spec, seed=21)
        c = gen_scenario(spec, seed=22)
        assert np.array_equal(a[0].y, b[0].y)
        assert all(np.array_equal(s1.x, s2.x) for s1, s2 in zip(a[1], b[1]))
        assert a[3] == b[3]
        assert not np.array_equal(a[0].y, c[0].y)

    def test_adding_sources_never_perturbs_existing_studies(self):
        # per-study streams: study k's draws depend only on (seed, k)
        small = gen_scenario(SimSpec("ex1", s=0.3, m=3), seed=33)
        big = gen_scenario(SimSpec("ex1", s=0.3, m=7), seed=33)
        assert np.array_equal(small[0].x, big[0].x)
        assert np.array_equal(small[0].y, big[0].y)
        for s_small, s_big in zip(small[1], big[1]):
            assert np.array_equal(s_small.x, s_big.x)
            assert np.array_equal(s_small.y, s_big.y)
        assert small[3] == big[3][:3]

    def test_shift_ranges(self):
        rng = np.random.default_rng(500)
        for _ in range(N_CASES):
            s = float(rng.uniform(0.0, 0.39))
            seed = int(rng.integers(0, 2**32))
            spec = SimSpec("ex2mod", s=s, m=4)
            _, _, _, shifts = gen_scenario(spec, seed=seed)
            assert len(shifts) == 7
            assert all(0.0 <= v <= s for v in shifts[:4])
            assert all(s <= v <= 0.4 for v in shifts[4:])

    def test_fixed_shifts_pin_values(self):
        spec = SimSpec("ex1", s=0.2, m=2, fixed_shifts=(0.03, 0.17))
        _, _, _, shifts = gen_scenario(spec, seed=1)
        _, _, _, shifts2 = gen_scenario(spec, seed=2)
        assert shifts == (0.03, 0.17) == shifts2

    def test_gen_study_sizes(self):
        spec = SimSpec("ex1", n0=25, n_k=13)
        assert gen_study(spec, 0, 0.0, philox_stream(1, 0)).n == 25
        assert gen_study(spec, 3, 0.1, philox_stream(1, 3)).n == 13


class TestScenarioDump:
    def test_round_trips_bitwise(self, tmp_path):
        spec = SimSpec("ex2", s=0.2, m=2, n0=9, n_k=6)
        target, sources, _, _ = gen_scenario(spec, seed=8)
        paths = scenario_to_csv(target, sources, tmp_path)
        assert [p.name for p in paths] == ["target.csv", "source_01.csv", "source_02.csv"]
        cols = ("x1", "x2", "x3")
        back = load_csv(
            StudyConfig(
                path=str(tmp_path / "target.csv"),
                feature_columns=cols,
                response_column="y",
            )
        )
        assert np.array_equal(back.x, target.x)
        assert np.array_equal(back.y, target.y)

    def test_header_matches_dimension(self, tmp_path):
        spec = SimSpec("ex1", m=1, n0=4, n_k=4)
        target, sources, _, _ = gen_scenario(spec, seed=8)
        scenario_to_csv(target, sources, tmp_path)
        header = (tmp_path / "target.csv").read_text().splitlines()[0]
        assert header == "x1,y"


class TestExampleTable:
    def test_catalog_is_consistent(self):
        for ex, (d, sigma, n0, n_k, extra) in EXAMPLES.items():
            spec = SimSpec(ex, s=0.1)
            assert spec.d == d and spec.sigma == sigma
            assert spec.n0 == n0 and spec.n_k == n_k
            assert spec.total_sources - spec.m == extra
