import math

import numpy as np
import pytest

from pdckit import hom_reference as hom
from pdckit import jsa, units

from conftest import WAVELENGTH_M

TWO_FOLD = hom.SignalState(p0=0.997896, p1=0.002101, p2=0.000003)
THREE_FOLD = hom.SignalState(p0=0.94920, p1=0.05065, p2=0.00015)


def _pure_density(axis, width, center=0.0):
    """Rank-one density from a normalized Gaussian mode."""
    amplitude = np.exp(-(((axis - center) / width) ** 2))
    weights = jsa.trapezoid_weights(axis)
    amplitude = amplitude / math.sqrt(float(amplitude**2 @ weights))
    density = np.outer(amplitude, np.conj(amplitude))
    return hom.ReducedDensity(nu_axis=axis, density=density), amplitude


def _closed_form_overlap(params, w_signal_filter, w_trigger, w_ref, tau):
    """Gaussian algebra for the filtered overlap, written independently.

    Integrating the idler out of the correlated Gaussian amplitude with
    an intensity-transmission trigger filter leaves a kernel
    exp(-A(w1^2+w2^2) + 2B w1 w2) carrying a residual linear phase
    delta (w1 - w2) from the group delay.  Contracting with a Gaussian
    reference of width w_ref gives the dip profile in closed form.
    """
    pump = 1.0 / params.sigma_pump**2
    pm = params.gamma * params.length**2 / 4.0
    a = pump + pm * params.kappa_s**2
    b = pump + pm * params.kappa_s * params.kappa_i
    c = pump + pm * params.kappa_i**2
    d = 2.0 * c + (0.0 if math.isinf(w_trigger) else 2.0 / w_trigger**2)
    b_eff = b * b / d
    a_eff = a + 1.0 / w_signal_filter**2 - b_eff
    a_ref = a_eff + 1.0 / w_ref**2
    t_max = 2.0 * math.sqrt(
        (a_eff - b_eff) / (w_ref**2 * (a_ref - b_eff) * (a_ref + b_eff))
    )
    tau_center = -params.length * params.kappa_s / 2.0
    sigma_sq = (
        1.0 / params.sigma_pump**2
        + 1.0 / w_ref**2
        + 1.0 / w_signal_filter**2
        + pm * params.kappa_s**2
    )
    return t_max * math.exp(-((tau - tau_center) ** 2) / (2.0 * sigma_sq))


class TestOverlapT:
    def test_matched_pure_mode_gives_unity(self):
        axis = np.linspace(-8.0, 8.0, 301)
        g, amplitude = _pure_density(axis, 1.3)
        reference = hom.ReferenceField(mean_photons=0.01, amplitude_width=1.3)
        assert hom.overlap_T(reference, g) == pytest.approx(1.0, abs=1e-9)
        # precomputed samples take the same path
        assert hom.overlap_T(amplitude, g) == pytest.approx(1.0, abs=1e-9)

    def test_displaced_modes_are_orthogonal(self):
        axis = np.linspace(-16.0, 16.0, 801)
        g, _ = _pure_density(axis, 1.0, center=-5.0)
        reference = hom.ReferenceField(
            mean_photons=0.01, amplitude_width=1.0, center_detuning=5.0
        )
        assert hom.overlap_T(reference, g) < 1e-10

    def test_matches_gaussian_closed_form(self, source_params, one_nm_width):
        axis = jsa.default_axes(
            source_params, samples_per_width=10, extent_widths=3.5
        )
        grid = jsa.evaluate_jsa(source_params, axis, axis)
        signal_filter = jsa.SpectralFilter(amplitude_width=one_nm_width)
        trigger = jsa.SpectralFilter(amplitude_width=one_nm_width)
        g = jsa.reduced_density(grid, signal_filter, trigger)
        reference = hom.ReferenceField(
            mean_photons=0.01, amplitude_width=one_nm_width
        )
        center = -source_params.length * source_params.kappa_s / 2.0
        for tau in (center, 0.0, center + 1e-12, center - 0.5e-12):
            expected = _closed_form_overlap(
                source_params, one_nm_width, one_nm_width, one_nm_width, tau
            )
            assert hom.overlap_T(reference, g, tau) == pytest.approx(
                expected, rel=1e-4, abs=1e-9
            )

    def test_rejects_mismatched_samples(self):
        axis = np.linspace(-4.0, 4.0, 101)
        g, _ = _pure_density(axis, 1.0)
        with pytest.raises(ValueError, match="match"):
            hom.overlap_T(np.ones(50), g)

    def test_even_in_tau_with_peak_at_zero_for_real_kernels(self):
        axis = np.linspace(-8.0, 8.0, 257)
        g, _ = _pure_density(axis, 1.1)
        reference = hom.ReferenceField(mean_photons=0.01, amplitude_width=0.8)
        taus = np.linspace(0.1, 3.0, 7)
        t0 = hom.overlap_T(reference, g, 0.0)
        for tau in taus:
            forward = hom.overlap_T(reference, g, float(tau))
            backward = hom.overlap_T(reference, g, float(-tau))
            assert forward == pytest.approx(backward, rel=1e-9)
            assert t0 >= forward


class TestOverlapTprime:
    def test_matched_mode_unity(self):
        axis = np.linspace(-8.0, 8.0, 257)
        _, f = _pure_density(axis, 1.0)
        assert hom.overlap_Tprime(f, f, axis) == pytest.approx(1.0, abs=1e-9)

    def test_square_of_pure_overlap(self):
        axis = np.linspace(-8.0, 8.0, 257)
        _, f = _pure_density(axis, 1.0)
        _, u = _pure_density(axis, 1.7)
        for tau in (0.0, 0.4):
            single = hom.overlap_T_pure(u, f, axis, tau)
            assert hom.overlap_Tprime(u, f, axis, tau) == pytest.approx(
                single**2, rel=1e-12
            )

    def test_factorization_against_four_dimensional_quadrature(self):
        axis = np.linspace(-4.0, 4.0, 16)
        _, f = _pure_density(axis, 1.4)
        _, u = _pure_density(axis, 1.0)
        weights = jsa.trapezoid_weights(axis)
        tau = 0.3
        phase = np.exp(1j * tau * axis)
        # brute four-frequency sum of u*(1)u*(2) f(1)f(2)f*(3)f*(4) u(3)u(4)
        one = np.conj(u) * f * phase * weights
        two = u * np.conj(f) * np.conj(phase) * weights
        brute = complex(
            np.einsum("a,b,c,d->", one, one, two, two)
        )
        factorized = hom.overlap_Tprime(u, f, axis, tau)
        assert factorized == pytest.approx(abs(brute), rel=1e-12)

    def test_orthogonal_modes_vanish(self):
        axis = np.linspace(-16.0, 16.0, 257)
        _, f = _pure_density(axis, 1.0, center=-5.0)
        _, u = _pure_density(axis, 1.0, center=5.0)
        assert hom.overlap_Tprime(u, f, axis) < 1e-20


class TestCoincidence:
    def test_dark_input_gives_none(self):
        state = hom.SignalState(p0=1.0, p1=0.0, p2=0.0)
        reference = hom.ReferenceField(mean_photons=0.0, amplitude_width=1.0)
        assert hom.coincidence_full(state, reference, 1.0, 1.0) == 0.0

    def test_perfect_bunching_is_fourth_order(self):
        state = hom.SignalState(p0=0.0, p1=1.0, p2=0.0)
        for beta_sq in (1e-3, 1e-2, 5e-2):
            reference = hom.ReferenceField(
                mean_photons=beta_sq, amplitude_width=1.0
            )
            assert hom.coincidence_full(state, reference, 1.0, 1.0) < beta_sq**2

    def test_reference_only_accidentals(self):
        state = hom.SignalState(p0=1.0, p1=0.0, p2=0.0)
        reference = hom.ReferenceField(mean_photons=0.1, amplitude_width=1.0)
        value = hom.coincidence_simplified(state, reference, 0.9)
        assert value == pytest.approx(0.1**2 / 4.0, rel=1e-12)

    def test_pure_single_photon_dip_reaches_zero(self):
        state = hom.SignalState(p0=0.0, p1=1.0, p2=0.0)
        reference = hom.ReferenceField(mean_photons=0.05, amplitude_width=1.0)
        assert hom.coincidence_simplified(state, reference, 1.0) == 0.0

    def test_simplified_requires_weak_reference(self):
        state = hom.SignalState(p0=1.0, p1=0.0, p2=0.0)
        reference = hom.ReferenceField(mean_photons=0.25, amplitude_width=1.0)
        with pytest.raises(ValueError, match="coincidence_full"):
            hom.coincidence_simplified(state, reference, 1.0)

    @pytest.mark.parametrize("p1", [0.05, 0.3, 0.7])
    @pytest.mark.parametrize("p2", [1e-4, 1e-3])
    @pytest.mark.parametrize("overlap", [0.0, 0.41, 0.65, 0.9])
    def test_full_reduces_to_simplified_for_weak_reference(
        self, p1, p2, overlap
    ):
        # the linearized terms are accurate to a relative |beta|^2/2, so
        # the sub-percent regime ends near |beta|^2 = 0.02
        state = hom.SignalState(p0=1.0 - p1 - p2, p1=p1, p2=p2)
        for beta_sq, bound in ((1e-3, 0.01), (2e-2, 0.01), (5e-2, 0.03)):
            reference = hom.ReferenceField(
                mean_photons=beta_sq, amplitude_width=1.0
            )
            full = hom.coincidence_full(state, reference, overlap, overlap**2)
            simplified = hom.coincidence_simplified(state, reference, overlap)
            baseline = hom.coincidence_simplified(state, reference, 0.0)
            assert abs(full - simplified) / baseline < bound

    def test_three_fold_visibility_near_optimum(self):
        beta_opt = hom.beta_opt(THREE_FOLD)
        visibility = hom.visibility_vs_beta(THREE_FOLD, 0.65, beta_opt)
        assert visibility == pytest.approx(0.48, abs=0.03)

    @pytest.mark.parametrize("beta_sq", [0.02, 0.05])
    def test_isolated_component_visibilities(self, beta_sq):
        # diagnostic from the exact formula: a lone one-photon component
        # interferes almost perfectly while a lone two-photon component
        # contributes only a few percent, so it acts as background
        reference = hom.ReferenceField(mean_photons=beta_sq, amplitude_width=1.0)

        def dip_visibility(state):
            baseline = hom.coincidence_full(state, reference, 0.0, 0.0)
            bottom = hom.coincidence_full(state, reference, 1.0, 1.0)
            return (baseline - bottom) / baseline

        one_photon = hom.SignalState(p0=0.0, p1=1.0, p2=0.0)
        two_photon = hom.SignalState(p0=0.0, p1=0.0, p2=1.0)
        assert dip_visibility(one_photon) > 0.98
        assert dip_visibility(two_photon) < 0.05


class TestVisibilityCurve:
    def test_table_maxima_with_unit_overlap(self):
        assert hom.max_visibility(TWO_FOLD, 1.0) == pytest.approx(0.46, abs=0.005)
        assert hom.max_visibility(THREE_FOLD, 1.0) == pytest.approx(
            0.75, abs=0.005
        )

    def test_dense_scan_argmax_matches_closed_form(self):
        betas = np.geomspace(1e-4, 1.0, 20001)
        values = [
            hom.visibility_vs_beta(THREE_FOLD, 1.0, float(b)) for b in betas
        ]
        best = betas[int(np.argmax(values))]
        assert best == pytest.approx(hom.beta_opt(THREE_FOLD), rel=1e-3)

    def test_unimodal_derivative_sign_change(self):
        betas = np.geomspace(1e-4, 1.0, 2001)
        values = np.array(
            [hom.visibility_vs_beta(THREE_FOLD, 1.0, float(b)) for b in betas]
        )
        differences = np.sign(np.diff(values))
        switch = np.where(differences < 0)[0]
        assert switch.size > 0
        assert np.all(differences[: switch[0]] > 0)
        assert np.all(differences[switch[0] :] < 0)

    def test_no_two_photon_background_limit(self):
        state = hom.SignalState(p0=0.9, p1=0.1, p2=0.0)
        assert hom.visibility_vs_beta(state, 0.8, 0.0) == pytest.approx(0.8)
        assert hom.beta_opt(state) == 0.0

    def test_beta_opt_without_vacuum(self):
        state = hom.SignalState(p0=0.0, p1=0.9, p2=0.1)
        assert math.isinf(hom.beta_opt(state))


class TestFitOverlap:
    @staticmethod
    def _dataset(state, overlap, betas, noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        return [
            (
                float(b),
                hom.visibility_vs_beta(state, overlap, float(b))
                + (rng.normal(0.0, noise) if noise else 0.0),
            )
            for b in betas
        ]

    def test_exact_self_consistency(self):
        betas = np.geomspace(5e-3, 0.1, 9)
        fit = hom.fit_overlap(self._dataset(THREE_FOLD, 0.65, betas), THREE_FOLD)
        assert fit.overlap == pytest.approx(0.65, abs=1e-12)
        assert fit.stderr == pytest.approx(0.0, abs=1e-12)

    def test_three_fold_shape_with_noise(self):
        betas = np.geomspace(5e-3, 0.1, 12)
        data = self._dataset(THREE_FOLD, 0.65, betas, noise=0.01, seed=4)
        fit = hom.fit_overlap(data, THREE_FOLD)
        assert fit.overlap == pytest.approx(0.65, abs=0.03)
        assert 0.0 < fit.stderr < 0.05

    def test_two_fold_shape_with_noise(self):
        betas = np.geomspace(5e-4, 0.02, 12)
        data = self._dataset(TWO_FOLD, 0.41, betas, noise=0.005, seed=8)
        fit = hom.fit_overlap(data, TWO_FOLD)
        assert fit.overlap == pytest.approx(0.41, abs=0.02)

    def test_design_validation(self):
        with pytest.raises(ValueError, match="three"):
            hom.fit_overlap([(0.01, 0.3), (0.02, 0.4)], THREE_FOLD)
        with pytest.raises(ValueError, match="degenerate"):
            hom.fit_overlap(
                [(0.01, 0.3), (0.01, 0.31), (0.01, 0.29)], THREE_FOLD
            )


class TestDipWidth:
    def test_single_term_limits(self):
        inf = math.inf
        assert hom.dip_width(2.0, inf, inf, inf, 54.7) == pytest.approx(0.5)
        assert hom.dip_width(inf, 4.0, inf, inf, 54.7) == pytest.approx(0.25)
        assert hom.dip_width(inf, inf, 8.0, inf, 54.7) == pytest.approx(0.125)
        assert hom.dip_width(inf, inf, inf, 2.0, 90.0) == pytest.approx(0.5)

    def test_guide_parameters_give_two_picoseconds(self):
        sigma_pump = units.wavelength_fwhm_to_width(2.5e-9, WAVELENGTH_M)
        sigma_filter = units.wavelength_fwhm_to_width(1.0e-9, WAVELENGTH_M)
        sigma_pm = units.wavelength_fwhm_to_width(0.5e-9, WAVELENGTH_M)
        sigma_t = hom.dip_width(
            sigma_pump, sigma_filter, sigma_filter, sigma_pm, 54.7
        )
        fwhm = units.normal_sigma_to_fwhm(sigma_t)
        assert fwhm == pytest.approx(2.0e-12, abs=0.3e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            hom.dip_width(0.0, 1.0, 1.0, 1.0, 45.0)


class TestFidelity:
    def test_headline_value(self):
        result = hom.fidelity(0.65, 0.931)
        assert result.fidelity == pytest.approx(0.78, abs=0.01)

    def test_perfect(self):
        assert hom.fidelity(1.0, 1.0).fidelity == 1.0

    def test_reduced_overlap(self):
        assert hom.fidelity(0.41, 0.931).fidelity == pytest.approx(
            0.618, abs=5e-4
        )

    def test_monotone_in_each_argument(self):
        values = [hom.fidelity(t, 0.9).fidelity for t in (0.2, 0.5, 0.9)]
        assert values[0] < values[1] < values[2]
        values = [hom.fidelity(0.6, r).fidelity for r in (0.2, 0.5, 0.9)]
        assert values[0] < values[1] < values[2]

    def test_validation(self):
        with pytest.raises(ValueError):
            hom.fidelity(1.2, 0.5)


class TestTmaxPrediction:
    def test_separable_matched_reference_is_unity(self):
        sigma, ks, length, gamma = 1.0, 2.0, 2.0, 0.25
        pm = gamma * length**2 / 4.0
        params = jsa.PdcModelParams(
            sigma_pump=sigma,
            kappa_s=ks,
            kappa_i=-1.0 / (sigma**2 * pm * ks),
            length=length,
            gamma=gamma,
        )
        axis = jsa.default_axes(params, samples_per_width=10)
        grid = jsa.evaluate_jsa(params, axis, axis)
        m11, _, _ = jsa.correlation_matrix(params)
        mode_width = 1.0 / math.sqrt(m11)
        reference = hom.ReferenceField(
            mean_photons=0.01, amplitude_width=mode_width
        )
        open_filter = jsa.SpectralFilter.open_filter()
        for heralded in (False, True):
            value = hom.tmax_prediction(
                grid, open_filter, open_filter, reference, heralded=heralded
            )
            assert value == pytest.approx(1.0, abs=1e-6)

    def test_heralding_beats_two_fold(self, source_params, one_nm_width):
        axis = jsa.default_axes(
            source_params, samples_per_width=10, extent_widths=3.5
        )
        grid = jsa.evaluate_jsa(source_params, axis, axis)
        signal_filter = jsa.SpectralFilter(amplitude_width=one_nm_width)
        trigger = jsa.SpectralFilter(amplitude_width=one_nm_width)
        reference = hom.ReferenceField(
            mean_photons=0.01, amplitude_width=one_nm_width
        )
        three_fold = hom.tmax_prediction(
            grid, signal_filter, trigger, reference, heralded=True
        )
        two_fold = hom.tmax_prediction(
            grid, signal_filter, trigger, reference, heralded=False
        )
        assert three_fold > two_fold
        assert 0.0 < two_fold < 1.0

    def test_stable_under_grid_refinement(self, source_params, one_nm_width):
        signal_filter = jsa.SpectralFilter(amplitude_width=one_nm_width)
        trigger = jsa.SpectralFilter(amplitude_width=one_nm_width)
        reference = hom.ReferenceField(
            mean_photons=0.01, amplitude_width=one_nm_width
        )
        values = {}
        for samples in (8, 16):  # double the quadrature resolution
            axis = jsa.default_axes(
                source_params, samples_per_width=samples, extent_widths=3.0
            )
            grid = jsa.evaluate_jsa(source_params, axis, axis)
            values[samples] = [
                hom.tmax_prediction(
                    grid, signal_filter, trigger, reference, heralded=heralded
                )
                for heralded in (False, True)
            ]
        assert values[8] == pytest.approx(values[16], abs=1e-3)

    def test_narrowing_trigger_does_not_reduce_overlap(
        self, source_params, one_nm_width
    ):
        axis = jsa.default_axes(
            source_params, samples_per_width=10, extent_widths=3.5
        )
        grid = jsa.evaluate_jsa(source_params, axis, axis)
        signal_filter = jsa.SpectralFilter(amplitude_width=one_nm_width)
        reference = hom.ReferenceField(
            mean_photons=0.01, amplitude_width=one_nm_width
        )
        values = []
        for factor in (2.5, 1.6, 1.0):  # trigger narrows left to right
            trigger = jsa.SpectralFilter(
                amplitude_width=factor * one_nm_width
            )
            values.append(
                hom.tmax_prediction(
                    grid, signal_filter, trigger, reference, heralded=True
                )
            )
        assert values[0] <= values[1] <= values[2]


class TestHomScan:
    def test_matched_single_photon_dips_to_zero(self):
        state = hom.SignalState(p0=0.0, p1=1.0, p2=0.0)
        reference = hom.ReferenceField(mean_photons=0.05, amplitude_width=1.0)
        scan = hom.hom_scan_analytic(state, reference, 1.0, sigma_t=2.0)
        center = np.argmin(np.abs(scan.tau_axis))
        assert scan.coincidence[center] == pytest.approx(0.0, abs=1e-15)
        assert scan.visibility == pytest.approx(1.0)

    def test_spectral_scan_matches_width_formula(
        self, source_params, one_nm_width
    ):
        axis = jsa.default_axes(
            source_params, samples_per_width=10, extent_widths=3.5
        )
        grid = jsa.evaluate_jsa(source_params, axis, axis)
        g = jsa.reduced_density(
            grid,
            jsa.SpectralFilter(amplitude_width=one_nm_width),
            jsa.SpectralFilter(amplitude_width=one_nm_width),
        )
        reference = hom.ReferenceField(
            mean_photons=0.02, amplitude_width=one_nm_width
        )
        scan = hom.hom_scan(THREE_FOLD, reference, g)
        expected_sigma = hom.dip_width(
            source_params.sigma_pump,
            one_nm_width,
            one_nm_width,
            jsa.pm_width(source_params),
            54.7,
        )
        assert scan.dip_sigma_t == pytest.approx(expected_sigma, rel=0.02)
        assert scan.dip_center == pytest.approx(
            -source_params.length * source_params.kappa_s / 2.0, rel=1e-3
        )
        center = np.argmin(np.abs(scan.tau_axis))
        assert scan.coincidence[center] == np.min(scan.coincidence)
        assert 0.0 < scan.visibility < 1.0


class TestSinglesConversion:
    def test_round_trip(self):
        for beta_sq in (1e-3, 0.05, 0.5):
            singles = hom.singles_probability(beta_sq)
            assert hom.mean_photons_from_singles(singles) == pytest.approx(
                beta_sq, rel=1e-12
            )

    def test_weak_field_linearization(self):
        assert hom.singles_probability(0.01) == pytest.approx(0.005, rel=3e-3)
