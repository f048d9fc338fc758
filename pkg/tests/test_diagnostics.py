"""Mode finding, bimodality grading and highest-density regions."""

import numpy as np
import pytest

from borrowsim import (
    ExternalMean,
    GaussianComponent,
    GaussianMixture,
    MixturePriorSpec,
    Normal,
    StudentT,
    SufficientStat,
    bimodality_map,
    bimodality_ratio,
    find_modes,
    hpd_disjoint,
    mixture_cdf,
    mixture_pdf,
    OneArmScenario,
)

SEPARATED = GaussianMixture(
    (GaussianComponent(-2.0, 1.0), GaussianComponent(2.0, 1.0)), (0.5, 0.5)
)


def dense_grid_extrema(m, points=100_000):
    """Brute-force oracle: argmax/argmin of the density on a dense grid."""
    means = m.means()
    sds = m.sds()
    xs = np.linspace(means.min() - 6 * sds.max(), means.max() + 6 * sds.max(), points)
    pdf = mixture_pdf(xs, m)
    return xs, pdf


class TestFindModes:
    def test_informative_only_is_unimodal_at_its_mean(self):
        m = GaussianMixture(
            (GaussianComponent(0.3, 0.5), GaussianComponent(5.0, 1.0)), (1.0, 0.0)
        )
        report = find_modes(m)
        assert report.n_modes == 1
        assert report.antimode is None
        assert report.ratio == 1.0
        assert report.modes[0][0] == pytest.approx(0.3, abs=1e-9)

    def test_separated_pair_against_dense_grid(self):
        report = find_modes(SEPARATED)
        assert report.n_modes == 2
        xs, pdf = dense_grid_extrema(SEPARATED)
        peak = xs[np.argmax(pdf)]
        locs = sorted(x for x, _ in report.modes)
        assert min(abs(locs[0] - (-abs(peak))), abs(locs[1] - abs(peak))) < 1e-3
        assert abs(locs[0]) == pytest.approx(1.99865, abs=2e-4)
        assert report.antimode[0] == pytest.approx(0.0, abs=1e-9)
        # refined densities match the dense-grid extrema closely
        assert report.modes[0][1] == pytest.approx(pdf.max(), rel=1e-6)
        inner = (xs > locs[0]) & (xs < locs[1])
        assert report.antimode[1] == pytest.approx(pdf[inner].min(), rel=1e-6)

    def test_shared_mean_is_unimodal(self):
        m = GaussianMixture(
            (GaussianComponent(0.5, 0.3), GaussianComponent(0.5, 2.0)), (0.5, 0.5)
        )
        report = find_modes(m)
        assert report.n_modes == 1
        assert report.modes[0][0] == pytest.approx(0.5, abs=1e-9)

    def test_requires_two_components(self):
        with pytest.raises(ValueError):
            find_modes(GaussianMixture((GaussianComponent(0, 1),), (1.0,)))


class TestBimodalityRatio:
    def test_unimodal_convention(self):
        m = GaussianMixture(
            (GaussianComponent(0.0, 1.0), GaussianComponent(0.4, 1.0)), (0.5, 0.5)
        )
        assert bimodality_ratio(m) == 1.0

    def test_separated_pair_value(self):
        # grid oracle: min mode density / antimode density
        xs, pdf = dense_grid_extrema(SEPARATED)
        antimode = pdf[(xs > -1.5) & (xs < 1.5)].min()
        oracle = pdf.max() / antimode
        value = bimodality_ratio(SEPARATED)
        assert value == pytest.approx(oracle, rel=1e-6)
        assert value == pytest.approx(3.7, abs=0.05)

    def test_reflection_symmetry(self):
        def posterior_ratio(bias):
            ext = SufficientStat(bias, 15, 1.0)
            spec = MixturePriorSpec(0.9, ext, ExternalMean(), Normal(), n_robust=1.0)
            from borrowsim import build_mixture_prior, posterior

            data = SufficientStat(0.0, 20, 1.0)
            post = posterior(build_mixture_prior(spec, current=data), data)
            return bimodality_ratio(post.posterior)

        for b in (0.4, 0.9, 1.2):
            assert posterior_ratio(b) == pytest.approx(posterior_ratio(-b), abs=1e-9)

    def test_ratio_exceeds_one_iff_bimodal(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            m = GaussianMixture(
                (
                    GaussianComponent(rng.normal(0, 2), rng.uniform(0.3, 1.5)),
                    GaussianComponent(rng.normal(0, 2), rng.uniform(0.3, 1.5)),
                ),
                tuple(np.diff([0, *sorted([rng.random()]), 1])),
            )
            report = find_modes(m)
            assert report.ratio >= 1.0
            assert (report.ratio > 1.0) == (report.n_modes == 2)


class TestBimodalityMap:
    def scenario(self, location):
        ext = SufficientStat(0.0, 15, 1.0)
        spec = MixturePriorSpec(0.5, ext, location, Normal(), n_robust=1.0)
        return OneArmScenario(0.0, 0.5, 20, 1.0, ext, spec, seed=1, reps=10)

    def test_zero_weight_row_is_flat(self):
        from borrowsim import CurrentMean

        s = self.scenario(CurrentMean())
        sd_ext = s.sd_ext
        grid = bimodality_map(s, w_grid=[0.0, 0.5], bias_grid=[0.0, 2 * sd_ext, 4 * sd_ext])
        assert np.all(grid[0] == 1.0)

    def test_symmetric_in_bias_sign(self):
        from borrowsim import CurrentMean

        s = self.scenario(CurrentMean())
        sd_ext = s.sd_ext
        biases = [-3 * sd_ext, 3 * sd_ext]
        grid = bimodality_map(s, w_grid=[0.9, 0.95], bias_grid=biases)
        assert grid[:, 0] == pytest.approx(grid[:, 1], abs=1e-9)

    def test_student_t_form_rejected(self):
        ext = SufficientStat(0.0, 15, 1.0)
        spec = MixturePriorSpec(0.5, ext, ExternalMean(), StudentT(3.0, 1.0, 10))
        s = OneArmScenario(0.0, 0.5, 20, 1.0, ext, spec, seed=1, reps=10)
        with pytest.raises(TypeError):
            bimodality_map(s, w_grid=[0.5], bias_grid=[0.0])


class TestHpd:
    def test_unimodal_single_interval(self):
        m = GaussianMixture(
            (GaussianComponent(0.0, 1.0), GaussianComponent(0.5, 1.2)), (0.5, 0.5)
        )
        disjoint, intervals = hpd_disjoint(m, 0.95)
        assert not disjoint
        assert len(intervals) == 1

    def test_separated_pair_splits(self):
        disjoint, intervals = hpd_disjoint(SEPARATED, 0.90)
        assert disjoint
        assert len(intervals) == 2
        # level-set symmetry
        (a1, b1), (a2, b2) = intervals
        assert a1 == pytest.approx(-b2, abs=1e-6)
        assert b1 == pytest.approx(-a2, abs=1e-6)

    @pytest.mark.parametrize("level", [0.5, 0.8, 0.9, 0.95, 0.99])
    def test_mass_matches_level(self, level):
        disjoint, intervals = hpd_disjoint(SEPARATED, level)
        mass = sum(mixture_cdf(b, SEPARATED) - mixture_cdf(a, SEPARATED) for a, b in intervals)
        assert mass == pytest.approx(level, abs=1e-6)

    def test_regions_nest_as_level_grows(self):
        small = hpd_disjoint(SEPARATED, 0.5)[1]
        large = hpd_disjoint(SEPARATED, 0.9)[1]
        for a, b in small:
            assert any(a >= c - 1e-9 and b <= d + 1e-9 for c, d in large)

    def test_density_cut_property(self):
        # inside the region the density is at least the cutoff implied by
        # any point just outside
        _, intervals = hpd_disjoint(SEPARATED, 0.9)
        boundary_density = mixture_pdf(intervals[0][0], SEPARATED)
        inside = np.linspace(intervals[0][0], intervals[0][1], 50)
        assert np.all(mixture_pdf(inside, SEPARATED) >= boundary_density - 1e-9)

    def test_level_bounds_checked(self):
        with pytest.raises(ValueError):
            hpd_disjoint(SEPARATED, 1.0)
