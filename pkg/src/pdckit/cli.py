"""Command-line front end.

Each subcommand reads a flat scenario file, dispatches to the model
modules and emits a CSV table (to --out or stdout).  Identical
configuration yields byte-identical output; diagnostics go to stderr.
Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import hom_reference as hom
from . import jsa, photon_stats, twin_hom, units
from .errors import ConfigError, NumericalError
from .scenario import Scenario

DEFAULT_CENTER_WAVELENGTH = 796e-9


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    value = float(value)
    if value == 0.0:
        return "0"
    if abs(value) < 1e-3:
        return f"{value:.9e}"
    return f"{value:.9g}"


def _emit(header, rows, out_path: Path | None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        out_path.write_text(text, newline="")


def _read_csv_columns(path: Path, names: tuple[str, ...]) -> list[tuple]:
    try:
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            fields = reader.fieldnames or []
            for name in names:
                if name not in fields:
                    raise ConfigError(
                        f"data file {path} lacks column {name!r}"
                    )
            rows = [
                tuple(float(row[name]) for name in names) for row in reader
            ]
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}")
    except ValueError as exc:
        raise ConfigError(f"non-numeric entry in {path}: {exc}")
    if not rows:
        raise ConfigError(f"data file {path} contains no rows")
    return rows


# -- parameter assembly ----------------------------------------------------


def _center_wavelength(sc: Scenario) -> float:
    return sc.quantity(
        "center_wavelength", "length", default=DEFAULT_CENTER_WAVELENGTH
    )


def _width_from_fwhm(sc: Scenario, key: str, wavelength: float, **kw):
    fwhm = sc.quantity(key, "length", **kw)
    if fwhm is None:
        return None
    if fwhm <= 0:
        raise ConfigError(f"key {key!r}: width must be positive")
    return units.wavelength_fwhm_to_width(fwhm, wavelength)


def _source_params(sc: Scenario, default_pump_nm: float | None = None):
    """PdcModelParams from pump_fwhm, length, gamma and either explicit
    group-velocity mismatches or a phase-matching width plus tilt."""
    wavelength = _center_wavelength(sc)
    sigma_pump = _width_from_fwhm(sc, "pump_fwhm", wavelength)
    if sigma_pump is None:
        if default_pump_nm is None:
            raise ConfigError("missing required key 'pump_fwhm'")
        sigma_pump = units.wavelength_fwhm_to_width(
            default_pump_nm * 1e-9, wavelength
        )
    length = sc.quantity("length", "length", required=True)
    gamma = sc.number("gamma", default=0.193)
    kappa_s = sc.quantity("kappa_s", "inverse_velocity")
    kappa_i = sc.quantity("kappa_i", "inverse_velocity")
    wavelengths = (wavelength / 2.0, wavelength, wavelength)
    if kappa_s is not None or kappa_i is not None:
        if kappa_s is None or kappa_i is None:
            raise ConfigError("kappa_s and kappa_i must be given together")
        return jsa.PdcModelParams(
            sigma_pump=sigma_pump,
            kappa_s=kappa_s,
            kappa_i=kappa_i,
            length=length,
            gamma=gamma,
            center_wavelengths=wavelengths,
        )
    pm = _width_from_fwhm(sc, "pm_fwhm", wavelength)
    tilt = sc.quantity("tilt", "angle")
    if pm is None or tilt is None:
        raise ConfigError(
            "missing required key 'kappa_s'/'kappa_i' or 'pm_fwhm'/'tilt'"
        )
    return jsa.params_from_pm_estimate(
        sigma_pump=sigma_pump,
        pm_amplitude_width=pm,
        tilt_deg=tilt,
        length=length,
        gamma=gamma,
        center_wavelengths=wavelengths,
    )


def _sweep(sc: Scenario, stem: str, geometric: bool = False) -> list[float]:
    explicit = sc.number_list(f"{stem}_list")
    if explicit is not None:
        return explicit
    low = sc.number(f"{stem}_min", required=True)
    high = sc.number(f"{stem}_max", required=True)
    steps = sc.integer(f"{stem}_steps", default=21)
    if steps < 2 or high <= low:
        raise ConfigError(f"key {stem!r}: need {stem}_min < {stem}_max, steps >= 2")
    if geometric:
        if low <= 0:
            raise ConfigError(f"key {stem}_min must be positive")
        return list(np.geomspace(low, high, steps))
    return list(np.linspace(low, high, steps))


def _signal_state(sc: Scenario) -> hom.SignalState:
    p0 = sc.number("p0", required=True)
    p1 = sc.number("p1", required=True)
    p2 = sc.number("p2", required=True)
    try:
        return hom.SignalState(p0=p0, p1=p1, p2=p2)
    except ValueError as exc:
        raise ConfigError(f"keys 'p0'/'p1'/'p2': {exc}")


def _ellipse_row(label: str, e: jsa.CorrelationEllipse, wavelength: float):
    def to_nm(width: float) -> float:
        if math.isinf(width):
            return math.inf
        return units.width_to_wavelength_fwhm(width, wavelength) * 1e9

    return [
        label,
        e.m11,
        e.m12,
        e.m22,
        e.tilt_deg,
        e.major_width,
        e.minor_width,
        e.aspect_ratio,
        to_nm(e.major_width),
        to_nm(e.minor_width),
    ]


_ELLIPSE_HEADER = [
    "stage",
    "m11_s2",
    "m12_s2",
    "m22_s2",
    "tilt_deg",
    "major_width_rad_s",
    "minor_width_rad_s",
    "aspect_ratio",
    "major_fwhm_nm",
    "minor_fwhm_nm",
]


# -- command handlers -------------------------------------------------------


def _cmd_ellipse(sc: Scenario) -> tuple[list, list, list]:
    wavelength = _center_wavelength(sc)
    params = _source_params(sc)
    ellipse = jsa.build_ellipse(params)
    rows = [_ellipse_row("source", ellipse, wavelength)]
    return _ELLIPSE_HEADER, rows, [
        f"tilt = {ellipse.tilt_deg:.3f} deg, aspect ratio = "
        f"{ellipse.aspect_ratio:.3f}"
    ]


def _cmd_filter(sc: Scenario) -> tuple[list, list, list]:
    wavelength = _center_wavelength(sc)
    params = _source_params(sc)
    ws = _width_from_fwhm(sc, "filter_s_fwhm", wavelength, required=True)
    wi = _width_from_fwhm(sc, "filter_i_fwhm", wavelength, required=True)
    m11, m12, m22 = jsa.correlation_matrix(params)
    unfiltered = jsa.build_ellipse(params)
    # amplitude transmissions add 1/w^2 to each diagonal entry
    filtered = jsa.ellipse_from_matrix(
        m11 + 1.0 / ws**2, m12, m22 + 1.0 / wi**2
    )
    rows = [
        _ellipse_row("unfiltered", unfiltered, wavelength),
        _ellipse_row("filtered", filtered, wavelength),
    ]
    summary = [
        f"aspect ratio {unfiltered.aspect_ratio:.3f} -> "
        f"{filtered.aspect_ratio:.3f} after filtering"
    ]
    return _ELLIPSE_HEADER, rows, summary


def _cmd_pm_vs_length(sc: Scenario) -> tuple[list, list, list]:
    params = _source_params(sc, default_pump_nm=2.5)
    table = jsa.pm_width_vs_length(params, _sweep_lengths(sc))
    rows = [[L * 1e3, fwhm * 1e9] for L, fwhm in table]
    return ["length_mm", "pm_fwhm_nm"], rows, []


def _sweep_lengths(sc: Scenario) -> list[float]:
    low = sc.quantity("length_min", "length", required=True)
    high = sc.quantity("length_max", "length", required=True)
    steps = sc.integer("length_steps", default=21)
    if steps < 2 or high <= low:
        raise ConfigError("need length_min < length_max and length_steps >= 2")
    return list(np.linspace(low, high, steps))


def _cmd_twin_hom(sc: Scenario) -> tuple[list, list, list]:
    tilt = sc.quantity("tilt", "angle", required=True)
    gamma = sc.number("gamma", default=0.193)
    aspects = _sweep(sc, "aspect", geometric=True)
    rows = []
    for aspect in aspects:
        breakdown = twin_hom.overlap_breakdown(aspect, tilt, gamma)
        rows.append(
            [
                aspect,
                breakdown.o_spectral,
                breakdown.o_temporal,
                breakdown.o_total,
                twin_hom.visibility_from_overlap(breakdown.o_total),
            ]
        )
    header = [
        "aspect_ratio",
        "spectral_overlap",
        "temporal_overlap",
        "total_overlap",
        "visibility",
    ]
    return header, rows, []


def _cmd_herald_stats(sc: Scenario) -> tuple[list, list, list]:
    modes_unfiltered = sc.integer("modes_unfiltered", default=31)
    modes_filtered = sc.integer("modes_filtered", default=1)
    eta_t = sc.number("trigger_efficiency", default=0.0)
    nmax = sc.integer("nmax", default=16)
    gains = _sweep(sc, "gain_sq")
    rows = []
    unfiltered_series = []
    filtered_series = []
    for gain in gains:
        mean_u = photon_stats.heralded_dist(
            photon_stats.multimode_dist(
                photon_stats.MultimodeSource(
                    n_modes=modes_unfiltered,
                    gain_sq=gain,
                    trigger_efficiency=eta_t,
                ),
                nmax=nmax,
            ),
            eta_t,
        ).mean()
        mean_f = photon_stats.heralded_dist(
            photon_stats.multimode_dist(
                photon_stats.MultimodeSource(
                    n_modes=modes_filtered,
                    gain_sq=gain,
                    trigger_efficiency=eta_t,
                ),
                nmax=nmax,
            ),
            eta_t,
        ).mean()
        rows.append([gain, mean_u, mean_f])
        unfiltered_series.append((gain, mean_u))
        filtered_series.append((gain, mean_f))
    summary = []
    if len(gains) >= 2:
        fit = photon_stats.estimate_mode_reduction(
            unfiltered_series, filtered_series
        )
        implied = photon_stats.implied_mode_count(
            fit.slope_ratio, modes_filtered
        )
        summary.append(
            f"slope ratio = {fit.slope_ratio:.4f}, implied unfiltered "
            f"modes = {implied:.2f} (intercepts "
            f"{fit.intercept_unfiltered:.4f}, {fit.intercept_filtered:.4f})"
        )
    return ["gain_sq", "mean_unfiltered", "mean_filtered"], rows, summary


def _cmd_visibility_curve(sc: Scenario) -> tuple[list, list, list]:
    state = _signal_state(sc)
    overlap = sc.number("overlap", default=1.0)
    betas = _sweep(sc, "beta_sq", geometric=True)
    rows = [
        [beta, hom.visibility_vs_beta(state, overlap, beta)] for beta in betas
    ]
    optimum = hom.beta_opt(state)
    summary = [
        f"beta_sq_opt = {optimum:.6g}, "
        f"visibility_max = {hom.max_visibility(state, overlap):.6g}"
    ]
    return ["beta_sq", "visibility"], rows, summary


def _cmd_fit_overlap(sc: Scenario) -> tuple[list, list, list]:
    state = _signal_state(sc)
    data_path = sc.data_path or sc.path("data")
    if data_path is None:
        raise ConfigError("missing required key 'data' (beta_sq/visibility CSV)")
    measurements = _read_csv_columns(data_path, ("beta_sq", "visibility"))
    fit = hom.fit_overlap(measurements, state)
    rows = [[fit.overlap, fit.stderr, fit.n_points]]
    return ["overlap", "stderr", "n_points"], rows, []


def _reference(sc: Scenario, wavelength: float, beta_sq: float):
    width = _width_from_fwhm(sc, "reference_fwhm", wavelength, required=True)
    return hom.ReferenceField(mean_photons=beta_sq, amplitude_width=width)


def _spectral_dip(sc: Scenario, state, beta_sq: float):
    wavelength = _center_wavelength(sc)
    params = _source_params(sc)
    reference = _reference(sc, wavelength, beta_sq)
    ws = _width_from_fwhm(sc, "signal_filter_fwhm", wavelength, required=True)
    wt = _width_from_fwhm(sc, "trigger_filter_fwhm", wavelength)
    signal_filter = jsa.SpectralFilter(amplitude_width=ws)
    trigger_filter = (
        jsa.SpectralFilter(amplitude_width=wt)
        if wt is not None
        else jsa.SpectralFilter.open_filter()
    )
    axis = jsa.default_axes(params, samples_per_width=sc.grid_points)
    grid = jsa.evaluate_jsa(params, axis, axis)
    g = jsa.reduced_density(grid, fs=signal_filter, fi=trigger_filter)
    return hom.hom_scan(
        state,
        reference,
        g,
        n_points=sc.integer("tau_steps", default=81),
        span_sigmas=sc.number("tau_span_sigmas", default=4.0),
    )


def _cmd_hom_scan(sc: Scenario) -> tuple[list, list, list]:
    state = _signal_state(sc)
    beta_sq = sc.number("beta_sq", required=True)
    if "tmax" in sc.values:
        overlap_max = sc.number("tmax", required=True)
        sigma_t = sc.quantity("dip_sigma", "time", required=True)
        wavelength = _center_wavelength(sc)
        width = _width_from_fwhm(sc, "reference_fwhm", wavelength)
        reference = hom.ReferenceField(
            mean_photons=beta_sq,
            amplitude_width=width if width is not None else 1.0,
        )
        scan = hom.hom_scan_analytic(
            state,
            reference,
            overlap_max,
            sigma_t,
            n_points=sc.integer("tau_steps", default=81),
            span_sigmas=sc.number("tau_span_sigmas", default=4.0),
        )
    else:
        scan = _spectral_dip(sc, state, beta_sq)
    rows = [
        [tau * 1e12, overlap, coincidence]
        for tau, overlap, coincidence in zip(
            scan.tau_axis, scan.overlap, scan.coincidence
        )
    ]
    summary = [
        f"visibility = {scan.visibility:.6g}",
        f"dip sigma = {scan.dip_sigma_t * 1e12:.6g} ps, fwhm = "
        f"{units.normal_sigma_to_fwhm(scan.dip_sigma_t) * 1e12:.6g} ps",
        f"dip center offset = {scan.dip_center * 1e12:.6g} ps",
    ]
    return ["tau_ps", "overlap", "coincidence"], rows, summary


def _cmd_dip_width(sc: Scenario) -> tuple[list, list, list]:
    wavelength = _center_wavelength(sc)
    sigma_pump = _width_from_fwhm(sc, "pump_fwhm", wavelength, required=True)
    sigma_ref = _width_from_fwhm(
        sc, "reference_fwhm", wavelength, required=True
    )
    sigma_filter = _width_from_fwhm(
        sc, "signal_filter_fwhm", wavelength, required=True
    )
    sigma_pm = _width_from_fwhm(sc, "pm_fwhm", wavelength, required=True)
    tilt = sc.quantity("tilt", "angle", required=True)
    sigma_t = hom.dip_width(sigma_pump, sigma_ref, sigma_filter, sigma_pm, tilt)
    rows = [[sigma_t * 1e12, units.normal_sigma_to_fwhm(sigma_t) * 1e12]]
    return ["dip_sigma_ps", "dip_fwhm_ps"], rows, []


def _cmd_tmax(sc: Scenario) -> tuple[list, list, list]:
    wavelength = _center_wavelength(sc)
    params = _source_params(sc)
    reference = _reference(sc, wavelength, sc.number("beta_sq", default=0.01))
    ws = _width_from_fwhm(sc, "signal_filter_fwhm", wavelength, required=True)
    wt = _width_from_fwhm(sc, "trigger_filter_fwhm", wavelength, required=True)
    signal_filter = jsa.SpectralFilter(amplitude_width=ws)
    trigger_filter = jsa.SpectralFilter(amplitude_width=wt)
    axis = jsa.default_axes(params, samples_per_width=sc.grid_points)
    grid = jsa.evaluate_jsa(params, axis, axis)
    rows = []
    for label, heralded in (("two-fold", False), ("three-fold", True)):
        fi = trigger_filter if heralded else jsa.SpectralFilter.open_filter()
        g = jsa.reduced_density(grid, fs=signal_filter, fi=fi)
        overlap_max = hom.tmax_prediction(
            grid, signal_filter, trigger_filter, reference, heralded=heralded
        )
        rows.append([label, overlap_max, jsa.purity(g)])
    return ["case", "tmax", "purity"], rows, []


def _cmd_invert(sc: Scenario) -> tuple[list, list, list]:
    efficiency = sc.number("efficiency", required=True)
    observed = sc.number_list("observed")
    if observed is None:
        data_path = sc.data_path or sc.path("data")
        if data_path is None:
            raise ConfigError("missing required key 'observed' or 'data'")
        observed = [
            row[0] for row in _read_csv_columns(data_path, ("probability",))
        ]
    observable = sc.word(
        "observable", ("photon", "clicks"), default="photon"
    )
    nmax = sc.integer("nmax")
    max_iter = sc.integer("max_iter", default=100_000)
    tol = sc.number("tol", default=1e-10)
    detector = photon_stats.DetectorModel(
        efficiency=efficiency, nmax=nmax if nmax is not None else 10
    )
    try:
        if observable == "clicks":
            result = photon_stats.ml_invert(
                photon_stats.ClickDist(np.asarray(observed)),
                detector,
                max_iter=max_iter,
                tol=tol,
                nmax=nmax,
            )
        else:
            result = photon_stats.invert_loss_only(
                np.asarray(observed),
                detector,
                max_iter=max_iter,
                tol=tol,
                nmax=nmax,
            )
    except ValueError as exc:
        raise ConfigError(f"key 'observed': {exc}")
    if not result.converged:
        raise NumericalError(
            f"inversion did not converge within {max_iter} iterations"
        )
    rows = [[n, p] for n, p in enumerate(result.state.probs)]
    summary = [
        f"converged in {result.iterations} iterations, "
        f"log-likelihood {result.log_likelihood:.9g}"
    ]
    return ["n", "probability"], rows, summary


def _cmd_fidelity(sc: Scenario) -> tuple[list, list, list]:
    overlap = sc.number("overlap", required=True)
    one_photon = sc.number("one_photon", required=True)
    result = hom.fidelity(overlap, one_photon)
    rows = [[result.spectral_overlap, result.one_photon, result.fidelity]]
    return ["spectral_overlap", "one_photon", "fidelity"], rows, []


_COMMANDS = {
    "ellipse": _cmd_ellipse,
    "filter": _cmd_filter,
    "pm-vs-length": _cmd_pm_vs_length,
    "twin-hom": _cmd_twin_hom,
    "herald-stats": _cmd_herald_stats,
    "visibility-curve": _cmd_visibility_curve,
    "fit-overlap": _cmd_fit_overlap,
    "hom-scan": _cmd_hom_scan,
    "dip-width": _cmd_dip_width,
    "tmax": _cmd_tmax,
    "invert": _cmd_invert,
    "fidelity": _cmd_fidelity,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="pdckit",
        description=(
            "Simulation toolkit for heralded single-photon sources based "
            "on waveguided parametric down-conversion"
        ),
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="scenario file")
    parser.add_argument("--out", help="CSV output path (default stdout)")
    parser.add_argument("--data", help="input data CSV for fitting commands")
    parser.add_argument(
        "--grid-points",
        type=int,
        default=12,
        help="grid samples per amplitude width (default 12)",
    )
    parser.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        scenario = Scenario.from_file(
            args.command,
            Path(args.config),
            out_path=Path(args.out) if args.out else None,
            data_path=Path(args.data) if args.data else None,
            grid_points=args.grid_points,
            verbose=args.verbose,
        )
        handler = _COMMANDS[scenario.command]
        header, rows, summary = handler(scenario)
        _emit(header, rows, scenario.out_path)
        for line in summary:
            print(line, file=sys.stderr)
        if scenario.verbose:
            unused = scenario.unused_keys()
            if unused:
                print(
                    f"ignored keys: {', '.join(unused)}", file=sys.stderr
                )
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
