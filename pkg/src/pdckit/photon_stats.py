"""Photon-number statistics of the heralded source.

Covers the thermal marginal of a single down-conversion mode, the
multimode convolution, heralding on a lossy trigger detector, the
forward model of a two-bin time-multiplexed click detector
(loss matrix followed by a splitting convolution), its
expectation-maximization inversion, and the mode-count estimate from
the power dependence of the heralded mean.

A note on inversion: a two-bin detector resolves three outcomes, so at
most the photon-number components 0, 1 and 2 are identifiable from one
click distribution.  ml_invert therefore reconstructs on that
identifiable support by default; a larger reconstruction space can be
requested explicitly, at the price of a likelihood ridge on which the
iteration settles at the most uniform consistent state rather than the
true one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhotonNumberDist",
    "ClickDist",
    "DetectorModel",
    "MultimodeSource",
    "InversionResult",
    "ModeReductionFit",
    "thermal_dist",
    "multimode_dist",
    "heralded_dist",
    "loss_matrix",
    "tmd_convolution_matrix",
    "forward_click_dist",
    "ml_invert",
    "invert_loss_only",
    "estimate_mode_reduction",
    "implied_mode_count",
]

_TAIL_LIMIT = 1e-6


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


@dataclass(frozen=True, eq=False)
class PhotonNumberDist:
    """Normalized photon-number probability vector with cutoff nmax."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        _require(probs.ndim == 1 and probs.size >= 1, "probs must be 1-d")
        _require(np.all(probs >= 0), "probabilities must be nonnegative")
        _require(
            abs(probs.sum() - 1.0) <= 1e-9,
            "probabilities must sum to one within 1e-9",
        )
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def nmax(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def second_moment(self) -> float:
        return float((np.arange(self.probs.size) ** 2) @ self.probs)


@dataclass(frozen=True, eq=False)
class ClickDist:
    """Probabilities of 0, 1 and 2 clicks on the two-bin detector."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        _require(probs.shape == (3,), "a two-bin detector has 3 outcomes")
        _require(np.all(probs >= 0), "probabilities must be nonnegative")
        _require(
            abs(probs.sum() - 1.0) <= 1e-9,
            "probabilities must sum to one within 1e-9",
        )
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class DetectorModel:
    """Binomial loss channel preceding the two-bin click detector."""

    efficiency: float
    nmax: int = 10

    def __post_init__(self) -> None:
        _require(0.0 <= self.efficiency <= 1.0, "efficiency must be in [0, 1]")
        _require(self.nmax >= 2, "nmax must be at least 2")


@dataclass(frozen=True)
class MultimodeSource:
    """Uniformly occupied spectral modes with a lossy trigger."""

    n_modes: int = 1
    gain_sq: float = 0.0
    trigger_efficiency: float = 1.0

    def __post_init__(self) -> None:
        _require(self.n_modes >= 1, "n_modes must be at least 1")
        _require(0.0 <= self.gain_sq < 1.0, "gain_sq must lie in [0, 1)")
        _require(
            0.0 <= self.trigger_efficiency <= 1.0,
            "trigger_efficiency must lie in [0, 1]",
        )


def _finalize(raw: np.ndarray, nmax: int, what: str) -> PhotonNumberDist:
    # The stored tail must stay negligible or the cutoff distorts moments.
    if raw[nmax] >= _TAIL_LIMIT:
        raise ValueError(
            f"cutoff too small for {what}: tail probability "
            f"{raw[nmax]:.2e} at n={nmax} exceeds {_TAIL_LIMIT:.0e}; "
            "increase nmax"
        )
    return PhotonNumberDist(raw / raw.sum())


def thermal_dist(gain_sq: float, nmax: int = 10) -> PhotonNumberDist:
    """Geometric photon-number distribution of one thermal mode.

    p_n is proportional to gain_sq**n; the mean is
    gain_sq / (1 - gain_sq).
    """
    _require(0.0 <= gain_sq < 1.0, "gain_sq must lie in [0, 1)")
    _require(nmax >= 1, "nmax must be at least 1")
    raw = (1.0 - gain_sq) * gain_sq ** np.arange(nmax + 1, dtype=float)
    return _finalize(raw, nmax, "thermal distribution")


def multimode_dist(source: MultimodeSource, nmax: int = 10) -> PhotonNumberDist:
    """Convolution of n_modes identical thermal modes.

    The leading entries of the convolution are exact under truncation,
    so the head of the result is the true multimode distribution before
    renormalization.
    """
    _require(nmax >= 1, "nmax must be at least 1")
    single = (1.0 - source.gain_sq) * source.gain_sq ** np.arange(
        nmax + 1, dtype=float
    )
    acc = np.zeros(nmax + 1)
    acc[0] = 1.0
    for _ in range(source.n_modes):
        acc = np.convolve(acc, single)[: nmax + 1]
    return _finalize(acc, nmax, "multimode distribution")


def heralded_dist(joint: PhotonNumberDist, eta_t: float) -> PhotonNumberDist:
    """Signal statistics conditioned on at least one trigger click.

    The joint probability of n pairs and a click is
    p_n * (1 - (1 - eta_t)^n).  eta_t = 0 selects the vanishing-loss
    limit n * p_n / mean, which the conditional distribution approaches
    from above in trigger efficiency.

    Raises:
        ValueError: when the input carries no photons, so the click
            probability vanishes.
    """
    _require(0.0 <= eta_t <= 1.0, "eta_t must lie in [0, 1]")
    n = np.arange(joint.probs.size, dtype=float)
    if eta_t == 0.0:
        weights = n
    else:
        weights = 1.0 - (1.0 - eta_t) ** n
    raw = joint.probs * weights
    total = raw.sum()
    if total <= 0.0:
        raise ValueError(
            "click probability vanishes: the joint distribution is vacuum"
        )
    return _finalize(raw / total, joint.nmax, "heralded distribution")


def loss_matrix(detector: DetectorModel) -> np.ndarray:
    """Binomial loss map from n photons to m surviving photons.

    L[m, n] = C(n, m) eta^m (1-eta)^(n-m); every column sums to one.
    """
    eta = detector.efficiency
    size = detector.nmax + 1
    L = np.zeros((size, size))
    for n in range(size):
        for m in range(n + 1):
            L[m, n] = math.comb(n, m) * eta**m * (1.0 - eta) ** (n - m)
    return L


def tmd_convolution_matrix(nmax: int) -> np.ndarray:
    """Click-count map of a two-bin splitter with two threshold detectors.

    n photons split 50/50 produce one click unless they all bunch into
    one bin: P(1|n) = 2^(1-n) and P(2|n) = 1 - 2^(1-n) for n >= 1.
    """
    _require(nmax >= 2, "nmax must be at least 2")
    C = np.zeros((3, nmax + 1))
    C[0, 0] = 1.0
    for n in range(1, nmax + 1):
        C[1, n] = 2.0 ** (1 - n)
        C[2, n] = 1.0 - 2.0 ** (1 - n)
    return C


def forward_click_dist(
    rho: PhotonNumberDist, detector: DetectorModel
) -> ClickDist:
    """Predicted click statistics: loss first, then the splitter map."""
    probs = rho.probs
    if probs.size < 3:  # the splitter map needs at least two photons
        probs = np.pad(probs, (0, 3 - probs.size))
    nmax = probs.size - 1
    model = DetectorModel(detector.efficiency, nmax=nmax)
    clicks = tmd_convolution_matrix(nmax) @ (loss_matrix(model) @ probs)
    return ClickDist(clicks)


@dataclass(frozen=True)
class InversionResult:
    """Outcome of an expectation-maximization inversion."""

    state: PhotonNumberDist
    converged: bool
    iterations: int
    log_likelihood: float


def _em_iterate(
    observed: np.ndarray,
    response: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, int, bool, float]:
    """Multiplicative maximum-likelihood update for observed = response @ rho.

    The response matrix must have unit column sums, which makes every
    update normalization-preserving and the likelihood non-decreasing;
    that monotonicity is asserted on every iteration.
    """
    support = observed > 0
    size = response.shape[1]
    rho = np.full(size, 1.0 / size)

    def log_likelihood(state: np.ndarray) -> float:
        predicted = response @ state
        return float(
            observed[support] @ np.log(np.maximum(predicted[support], 1e-300))
        )

    previous_ll = log_likelihood(rho)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        predicted = response @ rho
        ratio = np.zeros_like(observed)
        ratio[support] = observed[support] / np.maximum(
            predicted[support], 1e-300
        )
        updated = rho * (response.T @ ratio)
        updated /= updated.sum()
        current_ll = log_likelihood(updated)
        if current_ll < previous_ll - 1e-9 * max(1.0, abs(previous_ll)):
            raise AssertionError(
                "EM likelihood decreased; response matrix is inconsistent"
            )
        step = float(np.max(np.abs(updated - rho)))
        rho = updated
        previous_ll = current_ll
        if step < tol:
            converged = True
            break
    return rho, iterations, converged, previous_ll


def ml_invert(
    clicks: ClickDist,
    detector: DetectorModel,
    max_iter: int = 100_000,
    tol: float = 1e-10,
    nmax: int | None = None,
) -> InversionResult:
    """Maximum-likelihood photon statistics behind observed click statistics.

    Runs the multiplicative expectation-maximization fixed point for the
    forward model splitter_map @ loss_matrix.  Never fails silently: a
    result that stopped on the iteration budget is returned with
    converged=False.

    Args:
        clicks: observed 0/1/2-click probabilities.
        detector: calibrated efficiency (must be positive).
        max_iter: iteration budget.
        tol: stop when the largest per-component update falls below this.
        nmax: reconstruction cutoff; defaults to 2, the largest photon
            number identifiable from three click outcomes.
    """
    _require(detector.efficiency > 0.0, "inversion requires efficiency > 0")
    if nmax is None:
        nmax = clicks.probs.size - 1
    _require(nmax >= 2, "nmax must be at least 2")
    model = DetectorModel(detector.efficiency, nmax=nmax)
    response = tmd_convolution_matrix(nmax) @ loss_matrix(model)
    rho, iterations, converged, ll = _em_iterate(
        clicks.probs, response, max_iter, tol
    )
    return InversionResult(
        state=PhotonNumberDist(rho),
        converged=converged,
        iterations=iterations,
        log_likelihood=ll,
    )


def invert_loss_only(
    observed: np.ndarray,
    detector: DetectorModel,
    max_iter: int = 100_000,
    tol: float = 1e-10,
    nmax: int | None = None,
) -> InversionResult:
    """Undo detection loss from photon-number-basis statistics.

    For data already expressed as photon counts (for example click
    statistics that the splitter map has been removed from), the
    forward model is the loss matrix alone.  The last observed entry is
    treated as inclusive of all higher counts, which keeps the response
    matrix stochastic.

    Args:
        observed: probabilities of 0 .. K-1 detected photons, summing
            to one.
        detector: calibrated efficiency (must be positive).
        nmax: reconstruction cutoff; defaults to K-1, the identifiable
            support for K observed outcomes.
    """
    observed = np.asarray(observed, dtype=float)
    _require(observed.ndim == 1 and observed.size >= 2, "need >= 2 outcomes")
    _require(np.all(observed >= 0), "probabilities must be nonnegative")
    _require(
        abs(observed.sum() - 1.0) <= 1e-9,
        "probabilities must sum to one within 1e-9",
    )
    _require(detector.efficiency > 0.0, "inversion requires efficiency > 0")
    outcomes = observed.size
    if nmax is None:
        nmax = outcomes - 1
    _require(nmax >= outcomes - 1, "nmax must cover the observed outcomes")
    model = DetectorModel(detector.efficiency, nmax=nmax)
    full = loss_matrix(model)
    response = np.zeros((outcomes, nmax + 1))
    response[: outcomes - 1] = full[: outcomes - 1]
    response[outcomes - 1] = full[outcomes - 1 :].sum(axis=0)
    rho, iterations, converged, ll = _em_iterate(
        observed, response, max_iter, tol
    )
    return InversionResult(
        state=PhotonNumberDist(rho),
        converged=converged,
        iterations=iterations,
        log_likelihood=ll,
    )


@dataclass(frozen=True)
class ModeReductionFit:
    """Linear fits of heralded mean versus power for two filter settings.

    slope_ratio estimates (M_unfiltered + 1) / (M_filtered + 1); the
    intercepts are diagnostics that should sit near one in the low-gain
    regime.
    """

    slope_unfiltered: float
    intercept_unfiltered: float
    slope_filtered: float
    intercept_filtered: float
    slope_ratio: float


def _fit_line(points) -> tuple[float, float]:
    data = np.asarray(points, dtype=float)
    _require(
        data.ndim == 2 and data.shape[1] == 2 and data.shape[0] >= 2,
        "each series needs at least two (power, mean) points",
    )
    power, mean = data[:, 0], data[:, 1]
    _require(np.all(power > 0), "powers must be positive")
    _require(np.ptp(power) > 0, "powers must not all coincide")
    slope, intercept = np.polyfit(power, mean, 1)
    return float(slope), float(intercept)


def estimate_mode_reduction(unfiltered, filtered) -> ModeReductionFit:
    """Slope ratio of heralded mean photon number against pump power.

    In the uniform multimode model the heralded mean grows like
    1 + (M + 1) * gain_sq, so the ratio of fitted slopes for two filter
    settings estimates (M_unfiltered + 1) / (M_filtered + 1).
    """
    slope_u, intercept_u = _fit_line(unfiltered)
    slope_f, intercept_f = _fit_line(filtered)
    _require(slope_f != 0.0, "filtered series has zero slope")
    return ModeReductionFit(
        slope_unfiltered=slope_u,
        intercept_unfiltered=intercept_u,
        slope_filtered=slope_f,
        intercept_filtered=intercept_f,
        slope_ratio=slope_u / slope_f,
    )


def implied_mode_count(slope_ratio: float, modes_filtered: int = 1) -> float:
    """Unfiltered mode count implied by a slope ratio and a known reference."""
    _require(modes_filtered >= 1, "modes_filtered must be at least 1")
    return slope_ratio * (modes_filtered + 1) - 1.0
