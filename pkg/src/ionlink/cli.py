"""Command-line front end: experiment subcommands with CSV/JSON emission.

Every output file embeds the config hash and master seed in '#'-prefixed
header lines (CSV) or top-level keys (JSON), so a rerun with the same config
and seed is byte-identical.  Exit code 0 means every requested output was
written; config and usage problems exit with code 2, runtime failures with
code 1, both after printing a machine-parsable JSON error object to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, modes, protocol, rate_model, swap
from .config import (
    DECAY_COOLANT_RECONSTRUCTION,
    HardwareConfig,
    coolant_config,
    ideal_config,
    load_config,
    measured_swap_config,
)
from .fitting import ScanResult, fit_sinusoid
from .detection import (
    ConfusionMatrix,
    choose_thresholds,
    classify_counts,
    effective_bright_probs,
    histograms_to_csv,
    simulate_histogram,
    spam_correct,
    thresholds_sidecar,
)
from .ion_photon import (
    coherence_scan,
    correlated_populations,
    correlation_scan,
    emit_ion_photon_state,
    fidelity_lower_bound_pair,
    fidelity_upper_bound,
    heralded_ion_state,
)

SEED_ENV_VAR = "IONLINK_SEED"
DEFAULT_SEED = 1

# number of bright ions for each two-ion basis index (dd, ud, du, uu)
BRIGHT_OF_INDEX = (0, 1, 1, 2)


class CliError(Exception):
    def __init__(self, category: str, message: str, exit_code: int = 1):
        super().__init__(message)
        self.category = category
        self.exit_code = exit_code


def _parse_grid(spec: str) -> np.ndarray:
    """Parse 'start:stop:num' into a linspace grid."""
    try:
        start, stop, num = spec.split(":")
        grid = np.linspace(float(start), float(stop), int(num))
    except Exception as exc:
        raise CliError("bad_grid", f"cannot parse grid spec {spec!r}: {exc}", 2)
    if grid.size < 3:
        raise CliError("bad_grid", "grid needs at least 3 points", 2)
    return grid


def _resolve_config(args) -> HardwareConfig:
    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except FileNotFoundError:
            raise CliError("config_missing", f"config file not found: {args.config}", 2)
        except ValueError as exc:
            raise CliError("config_invalid", str(exc), 2)
    else:
        cfg = HardwareConfig()
    if getattr(args, "profile", None) == "measured":
        cfg = measured_swap_config(cfg)
    if args.ideal:
        cfg = ideal_config(cfg)
    return cfg


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError("bad_seed", f"{SEED_ENV_VAR}={env!r} is not an integer", 2)
    return DEFAULT_SEED


def _header(cfg: HardwareConfig, seed: int) -> tuple[str, ...]:
    return (f"ionlink={__version__}", f"config_hash={cfg.config_hash()}",
            f"seed={seed}")


def _write(out_dir: Path, name: str, content: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(content)


def _json_payload(cfg: HardwareConfig, seed: int, body: dict) -> str:
    payload = {"ionlink": __version__, "config_hash": cfg.config_hash(),
               "seed": seed}
    payload.update(body)
    return json.dumps(payload, sort_keys=True, indent=2)


# --- ion-photon --------------------------------------------------------------

def cmd_ion_photon(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args)
    out = Path(args.out)
    hwp = _parse_grid(args.grid) if args.grid else np.linspace(0.0, np.pi / 2.0, 37)
    phases = np.linspace(0.0, 2.0 * np.pi, 41)
    header = _header(cfg, seed)
    summary = {}
    for label, source in (("A", cfg.source_a()), ("B", cfg.source_b())):
        pair = emit_ion_photon_state(source)
        corr = correlation_scan(pair, hwp)
        ion = heralded_ion_state(pair, +1)
        coh = coherence_scan(ion, phases)
        _write(out, f"correlation_{label}.csv", corr.to_csv(header))
        _write(out, f"coherence_{label}.csv", coh.to_csv(header))
        pops = correlated_populations(pair)
        summary[label] = {
            "correlation": corr.fit_summary(),
            "coherence": coh.fit_summary(),
            "correlated_populations": pops,
            "fidelity_upper_bound": fidelity_upper_bound(corr.contrast),
            "fidelity_lower_bound": fidelity_lower_bound_pair(pops, coh.contrast),
        }
    _write(out, "ion_photon_fits.json", _json_payload(cfg, seed, summary))
    return 0


# --- swap --------------------------------------------------------------------

def _readout_shots(true_bright: np.ndarray, model, rng) -> np.ndarray:
    """Observed photon counts for an array of true bright-ion numbers."""
    counts = np.empty(true_bright.size, dtype=np.int64)
    for k in range(3):
        mask = true_bright == k
        n = int(mask.sum())
        if n == 0:
            continue
        eff = rng.choice(3, size=n, p=effective_bright_probs(k, model))
        counts[mask] = rng.poisson(model.dark_mean + eff * model.bright_mean)
    return counts


def _measure_state(rho, shots: int, model, thresholds, cm: ConfusionMatrix, rng):
    """Sample z-basis outcomes, push through readout, classify, SPAM-correct."""
    probs = np.clip(np.real(np.diag(rho.matrix)), 0.0, None)
    probs = probs / probs.sum()
    outcome_counts = rng.multinomial(shots, probs)
    true_bright = np.repeat(BRIGHT_OF_INDEX, outcome_counts)
    counts = _readout_shots(true_bright, model, rng)
    observed = np.bincount(classify_counts(counts, thresholds.t1, thresholds.t2),
                           minlength=3).astype(float)
    freq = observed / shots
    corr = spam_correct(freq, cm)
    return freq, corr


def cmd_swap(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args)
    out = Path(args.out)
    trials = args.trials
    if trials < 100:
        raise CliError("bad_trials", "swap needs at least 100 trials", 2)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    header = _header(cfg, seed)
    model = cfg.readout_model()

    # readout calibration: histograms, thresholds, analytic confusion matrix
    calib_shots = 20000
    hists = [simulate_histogram(k, model, calib_shots, rng) for k in range(3)]
    thresholds = choose_thresholds(hists)
    cm = ConfusionMatrix.from_model(model, thresholds.t1, thresholds.t2)
    _write(out, "readout_histograms.csv", histograms_to_csv(hists, header))
    _write(out, "readout_thresholds.json", thresholds_sidecar(thresholds))

    # heralds: signs are equally likely; each sign is analyzed after its own
    # phase-alignment wait, which maps both onto the plus Bell state
    sign_counts = {+1: int(rng.binomial(trials, 0.5))}
    sign_counts[-1] = trials - sign_counts[+1]
    states = {s: swap.aligned_state_from_config(cfg, sign=s) for s in (+1, -1)}

    # populations: half the shots, pooled over signs
    pop_freq = np.zeros(3)
    for s, n_s in sign_counts.items():
        shots = n_s // 2
        freq, _ = _measure_state(states[s], shots, model, thresholds, cm, rng)
        pop_freq += freq * (shots / (trials // 2))
    pop_corr = spam_correct(pop_freq / pop_freq.sum(), cm)
    odd_pops = float(pop_corr.populations[1])

    # parity scans: remaining shots split between the two pulse sequences
    phase_grid = np.linspace(0.0, np.pi, 13)
    scans = {}
    for pulses in ("two", "one"):
        values = np.empty_like(phase_grid)
        for i, phi in enumerate(phase_grid):
            parity_acc = 0.0
            for s, n_s in sign_counts.items():
                shots = max(1, (n_s // 4) // phase_grid.size)
                rotated = states[s]
                if pulses == "two":
                    rotated = analysis.apply_analysis_pulse(rotated, 0.0)
                rotated = analysis.apply_analysis_pulse(rotated, phi)
                _, corr = _measure_state(rotated, shots, model,
                                         thresholds, cm, rng)
                p = corr.populations
                parity_acc += (p[0] + p[2] - p[1]) * (n_s / trials)
            values[i] = parity_acc
        fit = fit_sinusoid(phase_grid, values, 2.0)
        scans[pulses] = ScanResult(control=phase_grid, series={"parity": values},
                                   fits={"parity": fit}, angular_frequency=2.0,
                                   contrast=fit.amplitude,
                                   control_label="control_value")
        _write(out, f"parity_{pulses}_pulse.csv", scans[pulses].to_csv(header))

    bound = analysis.fidelity_lower_bound(analysis.FidelityBoundInputs(
        odd_populations=odd_pops,
        two_pulse_contrast=min(1.0, scans["two"].contrast),
        one_pulse_contrast=min(1.0, scans["one"].contrast)))

    pops_csv = ["# " + line for line in header]
    pops_csv.append("bright_ions,raw_frequency,corrected_population")
    for k in range(3):
        pops_csv.append(f"{k},{pop_freq[k]:.12g},{pop_corr.populations[k]:.12g}")
    _write(out, "populations.csv", "\n".join(pops_csv) + "\n")

    summary = {
        "trials": trials,
        "profile": getattr(args, "profile", "measured"),
        "odd_populations": odd_pops,
        "two_pulse_contrast": scans["two"].contrast,
        "one_pulse_contrast": scans["one"].contrast,
        "fidelity_lower_bound": bound,
        "spam_clipped_mass": pop_corr.clipped_mass,
        "herald_sign_counts": {"+1": sign_counts[+1], "-1": sign_counts[-1]},
    }
    _write(out, "swap_summary.json", _json_payload(cfg, seed, summary))
    return 0


# --- rate --------------------------------------------------------------------

def cmd_rate(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args)
    out = Path(args.out)
    header = _header(cfg, seed)
    if args.grid:
        caps = np.unique(np.maximum(1, _parse_grid(args.grid).astype(int)))
    else:
        caps = np.array([1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000,
                         5000, 10000, 20000])
    schedule = rate_model.ScheduleParams(attempt_duration=cfg.attempt_duration,
                                         cooling_duration=cfg.cooling_duration)
    curves = {
        "coolant": (rate_model.DecayParams(*DECAY_COOLANT_RECONSTRUCTION), True),
        "no_coolant": (rate_model.DecayParams(cfg.decay_a, cfg.decay_b,
                                              cfg.decay_c), False),
    }
    for name, (params, coolant) in curves.items():
        lines = ["# " + h for h in header]
        lines.append("cap,cdf,mean_success_prob,rate_hz,rate_no_cooling_hz")
        for n in caps:
            c = rate_model.cdf(float(n), params)
            pb = rate_model.mean_success_prob(float(n), params)
            r_full = rate_model.request_rate(float(n), params, schedule, coolant,
                                             include_cooling=True)
            r_nc = rate_model.request_rate(float(n), params, schedule, coolant,
                                           include_cooling=False)
            lines.append(f"{n},{c:.12g},{pb:.12g},{r_full:.12g},{r_nc:.12g}")
        _write(out, f"rate_analytic_{name}.csv", "\n".join(lines) + "\n")

    # Monte Carlo at the configured caps, both schedules
    mc = {}
    for name, mc_cfg in (("no_coolant", cfg), ("coolant", coolant_config(cfg))):
        report = protocol.simulate_campaign(mc_cfg, args.trials, seed)
        mc[name] = report.summary()
        mc[name]["effective_attempt_rate_hz"] = protocol.effective_attempt_rate(mc_cfg)
        if args.records:
            records = [protocol.run_request(mc_cfg, protocol.request_rng(seed, k),
                                            request_index=k)
                       for k in range(min(args.trials, 100_000))]
            _write(out, f"herald_records_{name}.csv",
                   protocol.records_to_csv(records, header))
    _write(out, "rate_mc.json", _json_payload(cfg, seed, mc))
    return 0


# --- modes -------------------------------------------------------------------

def cmd_modes(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args)
    out = Path(args.out)
    header = _header(cfg, seed)
    if args.single_ion:
        spec = modes.ChainSpec(masses_amu=(modes.MASS_BA_138,),
                               axial_freq_ref=args.axial_ref or 367e3,
                               radial_freq_ref=args.radial_ref or 890e3)
    elif args.axial_ref and args.radial_ref:
        spec = modes.ChainSpec(masses_amu=modes.YB_BA_BA_MASSES,
                               axial_freq_ref=args.axial_ref,
                               radial_freq_ref=args.radial_ref)
    else:
        spec = modes.calibrate_reference_frequencies()
    tables = {d: modes.normal_modes(spec, d) for d in ("axial", "radial")}
    for d, table in tables.items():
        _write(out, f"modes_{d}.csv", table.to_csv(header))

    # same-species sanity: 3 equal-mass axial frequency ratios
    eq_spec = modes.ChainSpec(masses_amu=(modes.MASS_BA_138,) * 3,
                              axial_freq_ref=spec.axial_freq_ref,
                              radial_freq_ref=spec.radial_freq_ref)
    eq = modes.normal_modes(eq_spec, "axial").frequencies
    ratios = (eq / eq[0]).tolist()
    coupling = [
        {"mode": c.mode_index + 1, "frequency_hz": c.frequency,
         "participation": c.participation, "below_floor": c.below_floor}
        for c in modes.coolant_coupling_report(tables["radial"], coolant_index=0)
    ]
    summary = {
        "axial_freq_ref_hz": spec.axial_freq_ref,
        "radial_freq_ref_hz": spec.radial_freq_ref,
        "axial_frequencies_hz": tables["axial"].frequencies.tolist(),
        "radial_frequencies_hz": tables["radial"].frequencies.tolist(),
        "equal_mass_axial_ratios": ratios,
        "equal_mass_expected": [1.0, 3.0 ** 0.5, (29.0 / 5.0) ** 0.5],
        "radial_coolant_coupling": coupling,
    }
    _write(out, "modes_summary.json", _json_payload(cfg, seed, summary))
    return 0


# --- budget ------------------------------------------------------------------

def cmd_budget(args) -> int:
    cfg = _resolve_config(args)
    seed = _resolve_seed(args)
    out = Path(args.out)
    header = _header(cfg, seed)
    err = analysis.error_budget(cfg)
    eff = analysis.efficiency_budget()

    lines = ["# " + h for h in header] + ["contribution,fraction"]
    for k, v in err.entries:
        lines.append(f"{k},{v:.12g}")
    lines.append(f"total,{err.total:.12g}")
    _write(out, "error_budget.csv", "\n".join(lines) + "\n")

    lines = ["# " + h for h in header] + ["stage,factor,running_product"]
    for label, factor, running in eff.stages:
        lines.append(f"{label},{factor:.12g},{running:.12g}")
    _write(out, "efficiency_budget.csv", "\n".join(lines) + "\n")

    _write(out, "budget.json", _json_payload(cfg, seed, {
        "error_budget": err.as_dict(), "efficiency_chain": eff.as_dict()}))
    sys.stdout.write("error budget\n" + err.to_text() + "\n\n")
    sys.stdout.write("photon collection chain\n" + eff.to_text() + "\n")
    return 0


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionlink",
        description="Heralded ion-ion entanglement simulator and analytics")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="YAML config file (defaults to built-in parameters)")
    common.add_argument("--seed", type=int, default=None,
                        help=f"master seed (env {SEED_ENV_VAR} overrides the default)")
    common.add_argument("--out", type=str, default="ionlink-out",
                        help="output directory")
    common.add_argument("--trials", type=int, default=100_000,
                        help="Monte Carlo sample count where applicable")
    common.add_argument("--ideal", action="store_true",
                        help="zero every error parameter")
    common.add_argument("--grid", type=str, default=None,
                        help="grid spec start:stop:num for the scanned variable")
    common.add_argument("--records", action="store_true",
                        help="also emit the per-request herald-record stream "
                             "(rate subcommand only)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ion-photon", parents=[common],
                   help="correlation and coherence scans of both sources"
                   ).set_defaults(func=cmd_ion_photon)
    p_swap = sub.add_parser("swap", parents=[common],
                            help="heralded two-ion state analysis with readout")
    p_swap.add_argument("--profile", choices=("measured", "predicted"),
                        default="measured",
                        help="error profile: measured tomography level or "
                             "predicted budget level")
    p_swap.set_defaults(func=cmd_swap)
    sub.add_parser("rate", parents=[common],
                   help="rate-vs-cap curves, analytic and Monte Carlo"
                   ).set_defaults(func=cmd_rate)
    p_modes = sub.add_parser("modes", parents=[common],
                             help="mixed-species chain normal modes")
    p_modes.add_argument("--axial-ref", type=float, default=None,
                         help="single-ion axial secular frequency (Hz)")
    p_modes.add_argument("--radial-ref", type=float, default=None,
                         help="single-ion radial secular frequency (Hz)")
    p_modes.add_argument("--single-ion", action="store_true",
                         help="solve a single reference ion instead of the chain")
    p_modes.set_defaults(func=cmd_modes)
    sub.add_parser("budget", parents=[common],
                   help="error and efficiency budget ledgers"
                   ).set_defaults(func=cmd_budget)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(json.dumps({"error": exc.category, "message": str(exc)})
                         + "\n")
        return exc.exit_code
    except (ValueError, RuntimeError) as exc:
        sys.stderr.write(json.dumps({"error": "runtime", "message": str(exc)})
                         + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
