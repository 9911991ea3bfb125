"""Hong-Ou-Mandel interference of the heralded signal with a coherent
reference.

The signal is truncated at two photons and interfered with a weak
coherent field on a balanced splitter.  The coincidence probability
depends on the photon statistics, on the reference strength, and on the
spectral overlap T between the reference mode and the one-photon
spectral density of the signal.  From the visibility against reference
power the overlap can be fitted, and together with the one-photon
probability it fixes the preparation fidelity sqrt(T * rho1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jsa import (
    ReducedDensity,
    SpectralFilter,
    SpectralGrid,
    reduced_density,
    trapezoid_weights,
)

__all__ = [
    "SignalState",
    "ReferenceField",
    "HomScan",
    "FidelityResult",
    "OverlapFit",
    "overlap_T",
    "overlap_T_pure",
    "overlap_Tprime",
    "coincidence_full",
    "coincidence_simplified",
    "visibility_vs_beta",
    "beta_opt",
    "max_visibility",
    "fit_overlap",
    "dip_width",
    "fidelity",
    "tmax_prediction",
    "hom_scan",
    "hom_scan_analytic",
    "singles_probability",
    "mean_photons_from_singles",
]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


@dataclass(frozen=True)
class SignalState:
    """Signal photon statistics truncated at the two-photon component."""

    p0: float
    p1: float
    p2: float

    def __post_init__(self) -> None:
        for p in (self.p0, self.p1, self.p2):
            _require(p >= 0.0, "probabilities must be nonnegative")
        _require(
            abs(self.p0 + self.p1 + self.p2 - 1.0) <= 1e-9,
            "p0 + p1 + p2 must equal one within 1e-9",
        )


@dataclass(frozen=True)
class ReferenceField:
    """Weak coherent reference with a Gaussian spectral amplitude."""

    mean_photons: float
    amplitude_width: float
    center_detuning: float = 0.0

    def __post_init__(self) -> None:
        _require(self.mean_photons >= 0.0, "mean_photons must be nonnegative")
        _require(self.amplitude_width > 0.0, "amplitude_width must be positive")

    def amplitude_samples(self, nu_axis: np.ndarray) -> np.ndarray:
        """Spectral amplitude normalized to unit quadrature norm."""
        nu_axis = np.asarray(nu_axis, dtype=float)
        profile = np.exp(
            -(((nu_axis - self.center_detuning) / self.amplitude_width) ** 2)
        )
        weights = trapezoid_weights(nu_axis)
        norm = math.sqrt(float(profile**2 @ weights))
        _require(norm > 0.0, "reference support does not meet the grid")
        return profile / norm


@dataclass(frozen=True, eq=False)
class HomScan:
    """Coincidence probability against relative delay, dip centered at zero."""

    tau_axis: np.ndarray
    coincidence: np.ndarray
    visibility: float
    dip_sigma_t: float
    overlap: np.ndarray
    dip_center: float


@dataclass(frozen=True)
class FidelityResult:
    """Spectral overlap, one-photon probability and resulting fidelity."""

    spectral_overlap: float
    one_photon: float
    fidelity: float


@dataclass(frozen=True)
class OverlapFit:
    """Least-squares overlap estimate from visibility measurements."""

    overlap: float
    stderr: float
    n_points: int


def _reference_samples(reference, nu_axis: np.ndarray) -> np.ndarray:
    if isinstance(reference, ReferenceField):
        return reference.amplitude_samples(nu_axis)
    samples = np.asarray(reference, dtype=complex)
    if samples.shape != nu_axis.shape:
        raise ValueError(
            "reference samples do not match the density grid axes"
        )
    return samples


def overlap_T(reference, g: ReducedDensity, tau: float = 0.0) -> float:
    """Spectral overlap of the reference with a mixed one-photon density.

    Evaluates the double integral of u*(w1) g(w1, w2) u(w2)
    exp(i tau (w1 - w2)) by trapezoid quadrature.  For a Hermitian
    kernel the result is real; an imaginary remnant above 1e-9 of the
    modulus raises.

    Args:
        reference: ReferenceField, or amplitude samples already on the
            density axis (mismatched sample grids are rejected).
        g: unit-trace spectral density.
        tau: relative delay in seconds.
    """
    u = _reference_samples(reference, g.nu_axis)
    weights = trapezoid_weights(g.nu_axis)
    vector = u * np.exp(-1j * tau * g.nu_axis) * weights
    value = complex(np.vdot(vector, g.density @ vector))
    if abs(value) > 0 and abs(value.imag) > 1e-9 * abs(value):
        raise AssertionError("overlap of a Hermitian kernel must be real")
    return float(value.real)


def overlap_T_pure(
    reference, f_samples: np.ndarray, nu_axis: np.ndarray, tau: float = 0.0
) -> float:
    """Overlap with a pure signal mode f: |<u, f e^{i tau w}>|^2."""
    nu_axis = np.asarray(nu_axis, dtype=float)
    u = _reference_samples(reference, nu_axis)
    f_samples = np.asarray(f_samples, dtype=complex)
    _require(f_samples.shape == nu_axis.shape, "f samples must match the axis")
    weights = trapezoid_weights(nu_axis)
    f_norm = float(np.real(np.conj(f_samples) * f_samples) @ weights)
    _require(abs(f_norm - 1.0) <= 1e-6, "f must be normalized on the grid")
    inner = complex(
        np.sum(np.conj(u) * f_samples * np.exp(1j * tau * nu_axis) * weights)
    )
    return abs(inner) ** 2


def overlap_Tprime(
    reference, f_samples: np.ndarray, nu_axis: np.ndarray, tau: float = 0.0
) -> float:
    """Two-photon overlap for a factorized pure signal.

    The four-frequency integrand factorizes into single-frequency
    inner products, so the value is the square of the pure one-photon
    overlap; no four-dimensional quadrature is needed.
    """
    return overlap_T_pure(reference, f_samples, nu_axis, tau) ** 2


def coincidence_full(
    state: SignalState,
    ref: ReferenceField,
    overlap_t: float,
    overlap_tprime: float,
) -> float:
    """Coincidence probability with no small-amplitude approximations.

    All five contributions are kept: reference-only accidentals, the
    signal/reference singles term with its interference reduction, the
    two-photon background and its two interference corrections.  The
    splitter halves the reference, so the working amplitude is
    beta/sqrt(2).
    """
    x = ref.mean_photons / 2.0  # |beta'|^2 after the balanced splitter
    e = math.exp(-x)
    return (
        state.p0 * (1.0 - e) ** 2
        + state.p1 * (1.0 - e)
        - state.p1 * overlap_t * x * e
        + state.p2 * (1.0 - 0.5 * e)
        - state.p2 * e * (overlap_t * x + overlap_tprime * x * x / 4.0)
    )


def coincidence_simplified(
    state: SignalState, ref: ReferenceField, overlap_t: float
) -> float:
    """Leading-order coincidence probability p0 x^2 + p1 x (1 - T) + p2/2.

    Valid for weak references; enforce mean_photons < 0.2 so that
    1 - exp(-x) is linear to better than ten percent.  Use
    coincidence_full beyond that.
    """
    if ref.mean_photons >= 0.2:
        raise ValueError(
            "mean_photons >= 0.2 is outside the linearized regime; "
            "use coincidence_full"
        )
    x = ref.mean_photons / 2.0
    return state.p0 * x * x + state.p1 * x * (1.0 - overlap_t) + state.p2 / 2.0


def visibility_vs_beta(
    state: SignalState, overlap_t0: float, beta_sq: float
) -> float:
    """Dip visibility at a given reference mean photon number.

    p1 T / (p0 beta^2/2 + p1 + p2/beta^2); the beta_sq -> 0 limit is 0
    when a two-photon background exists and T otherwise.
    """
    _require(beta_sq >= 0.0, "beta_sq must be nonnegative")
    if beta_sq == 0.0:
        if state.p2 > 0.0:
            return 0.0
        return overlap_t0 if state.p1 > 0.0 else 0.0
    denominator = (
        state.p0 * beta_sq / 2.0 + state.p1 + state.p2 / beta_sq
    )
    return state.p1 * overlap_t0 / denominator


def beta_opt(state: SignalState) -> float:
    """Reference power maximizing the visibility, sqrt(2 p2 / p0)."""
    if state.p0 == 0.0:
        return math.inf
    return math.sqrt(2.0 * state.p2 / state.p0)


def max_visibility(state: SignalState, overlap_t0: float = 1.0) -> float:
    """Visibility at the optimal reference power."""
    return state.p1 * overlap_t0 / (
        state.p1 + math.sqrt(2.0 * state.p0 * state.p2)
    )


def fit_overlap(measurements, state: SignalState) -> OverlapFit:
    """Least-squares spectral overlap from (beta_sq, visibility) data.

    The visibility model is linear in the overlap, so the estimate is
    the normal-equation solution with an ordinary standard error
    (equal weights; no error model on the data).

    Raises:
        ValueError: with fewer than three points or a design containing
            a single distinct reference power.
    """
    data = np.asarray(measurements, dtype=float)
    _require(
        data.ndim == 2 and data.shape[1] == 2 and data.shape[0] >= 3,
        "need at least three (beta_sq, visibility) points",
    )
    beta_sq, visibility = data[:, 0], data[:, 1]
    _require(np.all(beta_sq > 0), "beta_sq values must be positive")
    _require(
        np.unique(beta_sq).size >= 2,
        "degenerate design: need at least two distinct beta_sq values",
    )
    predictor = np.array(
        [visibility_vs_beta(state, 1.0, b) for b in beta_sq]
    )
    gram = float(predictor @ predictor)
    _require(gram > 0.0, "predictor vanishes for this state")
    estimate = float(predictor @ visibility) / gram
    residual = visibility - estimate * predictor
    dof = data.shape[0] - 1
    stderr = math.sqrt(float(residual @ residual) / dof / gram)
    return OverlapFit(overlap=estimate, stderr=stderr, n_points=data.shape[0])


def dip_width(
    sigma_pump: float,
    sigma_ref: float,
    sigma_signal_filter: float,
    sigma_pm: float,
    tilt_deg: float,
) -> float:
    """Gaussian sigma of the temporal interference dip, in seconds.

    sigma_t^2 sums the inverse squared widths of pump, reference and
    signal filter plus sin^2(tilt) over the squared phase-matching
    width; the overlap then decays as exp(-tau^2 / (2 sigma_t^2)).
    Infinite widths drop out of the sum.
    """
    for width in (sigma_pump, sigma_ref, sigma_signal_filter, sigma_pm):
        _require(width > 0.0, "all widths must be positive")
    sin_tilt = math.sin(math.radians(tilt_deg))
    total = 0.0
    for width in (sigma_pump, sigma_ref, sigma_signal_filter):
        if math.isfinite(width):
            total += 1.0 / width**2
    if math.isfinite(sigma_pm):
        total += sin_tilt**2 / sigma_pm**2
    return math.sqrt(total)


def fidelity(spectral_overlap: float, one_photon: float) -> FidelityResult:
    """Preparation fidelity sqrt(T * rho1) against the one-photon target."""
    _require(0.0 <= spectral_overlap <= 1.0, "overlap must lie in [0, 1]")
    _require(0.0 <= one_photon <= 1.0, "one_photon must lie in [0, 1]")
    return FidelityResult(
        spectral_overlap=spectral_overlap,
        one_photon=one_photon,
        fidelity=math.sqrt(spectral_overlap * one_photon),
    )


def _dip_peak(
    reference: ReferenceField, g: ReducedDensity
) -> tuple[float, float, float]:
    """Locate the overlap maximum in delay.

    Returns (tau_peak, overlap_peak, sigma_t_estimate).  The group
    delay carried by the kernel phase shifts the dip center away from
    zero delay; the starting guess reads that linear phase off the
    first off-diagonal, and a log-parabolic refinement (exact for the
    Gaussian model) polishes it.
    """
    axis = g.nu_axis
    step = axis[1] - axis[0]
    off_diagonal = np.sum(np.diagonal(g.density, offset=1))
    tau = float(np.angle(off_diagonal) / step) if abs(off_diagonal) > 0 else 0.0

    h = 0.5 / reference.amplitude_width
    sigma = h
    for _ in range(3):
        values = [overlap_T(reference, g, t) for t in (tau - h, tau, tau + h)]
        if min(values) <= 0.0:
            break
        lo, mid, hi = (math.log(v) for v in values)
        curvature = lo - 2.0 * mid + hi
        if curvature >= 0.0:
            break
        tau += 0.5 * h * (lo - hi) / curvature
        sigma = h / math.sqrt(-curvature)
        h /= 4.0
    return tau, overlap_T(reference, g, tau), sigma


def tmax_prediction(
    grid: SpectralGrid,
    signal_filter: SpectralFilter,
    trigger_filter: SpectralFilter,
    reference: ReferenceField,
    heralded: bool = True,
) -> float:
    """Maximal spectral overlap of the prepared state with the reference.

    Builds the filtered one-photon density, with the trigger filter
    applied when heralding and an open idler channel otherwise, and
    returns the overlap at the dip center, where a delay stage would
    operate.
    """
    fi = trigger_filter if heralded else SpectralFilter.open_filter()
    g = reduced_density(grid, fs=signal_filter, fi=fi)
    return _dip_peak(reference, g)[1]


def hom_scan(
    state: SignalState,
    ref: ReferenceField,
    g: ReducedDensity,
    tau_axis: np.ndarray | None = None,
    n_points: int = 81,
    span_sigmas: float = 4.0,
) -> HomScan:
    """Coincidence dip of the signal against the reference.

    The delay axis is reported relative to the dip center (the group
    delay a stage would compensate); dip_center records the removed
    offset.  Coincidences use the leading-order model, so the reference
    must be weak.
    """
    center, peak, sigma = _dip_peak(ref, g)
    if tau_axis is None:
        tau_axis = np.linspace(
            -span_sigmas * sigma, span_sigmas * sigma, n_points
        )
    else:
        tau_axis = np.asarray(tau_axis, dtype=float)
    overlap = np.array(
        [overlap_T(ref, g, t + center) for t in tau_axis]
    )
    coincidence = np.array(
        [coincidence_simplified(state, ref, t) for t in overlap]
    )
    baseline = coincidence_simplified(state, ref, 0.0)
    dip = coincidence_simplified(state, ref, peak)
    visibility = (baseline - dip) / baseline if baseline > 0 else 0.0
    tau_axis = tau_axis.copy()
    for array in (tau_axis, overlap, coincidence):
        array.setflags(write=False)
    return HomScan(
        tau_axis=tau_axis,
        coincidence=coincidence,
        visibility=visibility,
        dip_sigma_t=sigma,
        overlap=overlap,
        dip_center=center,
    )


def hom_scan_analytic(
    state: SignalState,
    ref: ReferenceField,
    overlap_max: float,
    sigma_t: float,
    tau_axis: np.ndarray | None = None,
    n_points: int = 81,
    span_sigmas: float = 4.0,
) -> HomScan:
    """Coincidence dip for a Gaussian overlap profile given in closed form."""
    _require(0.0 <= overlap_max <= 1.0, "overlap_max must lie in [0, 1]")
    _require(sigma_t > 0.0, "sigma_t must be positive")
    if tau_axis is None:
        tau_axis = np.linspace(
            -span_sigmas * sigma_t, span_sigmas * sigma_t, n_points
        )
    else:
        tau_axis = np.asarray(tau_axis, dtype=float)
    overlap = overlap_max * np.exp(-(tau_axis**2) / (2.0 * sigma_t**2))
    coincidence = np.array(
        [coincidence_simplified(state, ref, t) for t in overlap]
    )
    baseline = coincidence_simplified(state, ref, 0.0)
    dip = coincidence_simplified(state, ref, overlap_max)
    visibility = (baseline - dip) / baseline if baseline > 0 else 0.0
    tau_axis = tau_axis.copy()
    for array in (tau_axis, overlap, coincidence):
        array.setflags(write=False)
    return HomScan(
        tau_axis=tau_axis,
        coincidence=coincidence,
        visibility=visibility,
        dip_sigma_t=sigma_t,
        overlap=overlap,
        dip_center=0.0,
    )


def singles_probability(beta_sq: float) -> float:
    """Single-detector click probability of the halved reference."""
    _require(beta_sq >= 0.0, "beta_sq must be nonnegative")
    return 1.0 - math.exp(-0.5 * beta_sq)


def mean_photons_from_singles(p_singles: float) -> float:
    """Invert the singles rate to the reference mean photon number."""
    _require(0.0 <= p_singles < 1.0, "p_singles must lie in [0, 1)")
    return -2.0 * math.log(1.0 - p_singles)
