import numpy as np
import pytest

from ionlink.ion_photon import (
    SourceParams,
    coherence_scan,
    correlated_populations,
    correlation_scan,
    dephasing_infidelity,
    emit_ion_photon_state,
    fidelity_lower_bound_pair,
    fidelity_upper_bound,
    heralded_ion_state,
    ideal_pair_state,
    phase_averaging_infidelity,
    qubit_freq_for_averaging_error,
    raman_rotation,
    waveplate_unitary,
)
from ionlink.quantum import apply_channel, dephasing_channel, fidelity_pure, ket

HWP_GRID = np.linspace(0.0, np.pi / 2.0, 37)
PHASE_GRID = np.linspace(0.0, 2.0 * np.pi, 41)


def test_ideal_emission_matches_target():
    params = SourceParams(pump_fidelity=1.0, excite_prob=1.0, pol_mixing=0.0,
                          superposition_phase=0.0)
    state = emit_ion_photon_state(params)
    assert fidelity_pure(state, ideal_pair_state(0.0)) == pytest.approx(1.0, abs=1e-12)


def test_pump_error_scales_success_not_state():
    params = SourceParams(pump_fidelity=0.96, excite_prob=0.96, pol_mixing=0.0)
    state = emit_ion_photon_state(params)
    # sigma+ excitation: a wrongly pumped ion emits nothing, so the heralded
    # state is unchanged while the attempt success carries the product factor
    assert fidelity_pure(state, ideal_pair_state(0.0)) == pytest.approx(1.0, abs=1e-12)
    assert params.state_prep_efficiency == pytest.approx(0.9216, abs=1e-12)


def test_wrong_branch_emission_admixes_flipped_correlations():
    params = SourceParams(pump_fidelity=0.9, wrong_branch_emission=1.0)
    state = emit_ion_photon_state(params)
    w = 0.1 / (0.9 + 0.1)
    wrong = 0.5 * (ket((1, 0)).density().matrix + ket((0, 1)).density().matrix)
    expected = (1 - w) * ideal_pair_state(0.0).density().matrix + w * wrong
    assert np.allclose(state.matrix, expected, atol=1e-12)


def test_waveplate_trivial_settings():
    hwp0 = waveplate_unitary("half", 0.0)
    # diag(1, -1) up to global phase
    ratio = hwp0[1, 1] / hwp0[0, 0]
    assert ratio == pytest.approx(-1.0, abs=1e-12)
    hwp45 = waveplate_unitary("half", np.pi / 4.0)
    assert abs(hwp45[0, 1]) == pytest.approx(1.0, abs=1e-12)
    assert abs(hwp45[1, 0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(hwp45[0, 0]) < 1e-12
    for kind in ("half", "quarter"):
        u = waveplate_unitary(kind, 0.3)
        assert np.max(np.abs(u @ u.conj().T - np.eye(2))) < 1e-12
    with pytest.raises(ValueError):
        waveplate_unitary("third", 0.0)


def test_hwp_at_225_gives_balanced_outcomes():
    state = ideal_pair_state(0.0).density()
    scan = correlation_scan(state, np.array([0.0, np.pi / 8.0, np.pi / 4.0]))
    # at 22.5 degrees both conditionals are 1/2 by direct Born computation
    assert scan.series["p_up_given_V"][1] == pytest.approx(0.5, abs=1e-12)
    assert scan.series["p_up_given_H"][1] == pytest.approx(0.5, abs=1e-12)


def test_correlation_scan_ideal_contrast():
    state = ideal_pair_state(0.0).density()
    scan = correlation_scan(state, HWP_GRID)
    assert scan.contrast == pytest.approx(1.0, abs=1e-9)
    assert scan.series["p_up_given_V"].max() == pytest.approx(1.0, abs=1e-12)
    assert scan.series["p_up_given_V"].min() == pytest.approx(0.0, abs=1e-12)


def test_correlation_contrast_equals_one_minus_mixing():
    for p in (0.05, 0.2, 0.5):
        state = emit_ion_photon_state(SourceParams(pol_mixing=p))
        scan = correlation_scan(state, HWP_GRID)
        assert scan.contrast == pytest.approx(1.0 - p, abs=1e-6)


def test_reference_contrast_gives_documented_upper_bound():
    state = emit_ion_photon_state(SourceParams(pol_mixing=0.018))
    scan = correlation_scan(state, HWP_GRID)
    assert scan.contrast == pytest.approx(0.982, abs=1e-9)
    assert fidelity_upper_bound(scan.contrast) == pytest.approx(0.991, abs=1e-9)


def test_raman_rotation_basics():
    r_pi = raman_rotation(0.0, np.pi)
    flipped = r_pi @ np.array([1.0, 0.0])
    assert abs(flipped[1]) == pytest.approx(1.0, abs=1e-12)
    for phi in (0.0, 1.1, 4.0):
        half = raman_rotation(phi)
        assert np.allclose(half @ half, raman_rotation(phi, np.pi), atol=1e-12)
        assert np.max(np.abs(half @ half.conj().T - np.eye(2))) < 1e-12


@pytest.mark.parametrize("phase", [0.0, 0.48, 5.00])
def test_coherence_scan_recovers_source_phase(phase):
    pair = emit_ion_photon_state(SourceParams(superposition_phase=phase))
    ion = heralded_ion_state(pair, +1)
    scan = coherence_scan(ion, PHASE_GRID)
    assert scan.contrast == pytest.approx(1.0, abs=1e-9)
    assert scan.fits["p_up"].phase == pytest.approx(phase, abs=1e-6)


def test_negative_herald_flips_phase_by_pi():
    pair = emit_ion_photon_state(SourceParams(superposition_phase=1.0))
    ion = heralded_ion_state(pair, -1)
    scan = coherence_scan(ion, PHASE_GRID)
    assert scan.fits["p_up"].phase == pytest.approx((1.0 + np.pi) % (2 * np.pi),
                                                    abs=1e-6)


def test_coherence_contrast_bounds_fidelity():
    # contrast 0.962 with balanced populations -> lower bound 98.1%
    assert fidelity_lower_bound_pair(1.0, 0.962) == pytest.approx(0.981, abs=1e-12)


def test_dephased_ion_contrast_and_infidelity():
    pair = emit_ion_photon_state(SourceParams(superposition_phase=0.0))
    ion = heralded_ion_state(pair, +1)
    t, t2 = 40e-6, 550e-6
    gamma = np.exp(-((t / t2) ** 2))
    dephased = apply_channel(ion, dephasing_channel(gamma))
    scan = coherence_scan(dephased, PHASE_GRID)
    assert scan.contrast == pytest.approx(gamma, abs=1e-9)
    # the matching infidelity is the reference 0.26% decoherence contribution
    assert dephasing_infidelity(t, t2) == pytest.approx(0.0026, abs=1e-4)


def test_dephasing_infidelity_properties():
    assert dephasing_infidelity(0.0, 1.0) == 0.0
    # equal superposition fully dephased at t = T2 (exponential convention)
    assert dephasing_infidelity(38e-3, 38e-3, envelope="exponential") == \
        pytest.approx(0.5 * (1 - np.exp(-1)), abs=1e-12)
    ts = np.linspace(0.0, 5.0, 200)
    vals = [dephasing_infidelity(t, 1.0) for t in ts]
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
    assert dephasing_infidelity(1e3, 1.0) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        dephasing_infidelity(1.0, -1.0)
    with pytest.raises(ValueError):
        dephasing_infidelity(1.0, 1.0, envelope="lorentzian")


def test_phase_averaging_values():
    assert phase_averaging_infidelity(0.0, 1e8) == 0.0
    # omega*T = pi -> (1 - 2/pi)/2
    omega, window = 1e9, np.pi / 1e9
    assert phase_averaging_infidelity(window, omega) == \
        pytest.approx(0.5 * (1 - 2 / np.pi), abs=1e-12)


def test_qubit_freq_calibration_round_trip():
    omega = qubit_freq_for_averaging_error(0.001, 3e-9)
    assert phase_averaging_infidelity(3e-9, omega) == pytest.approx(0.001, abs=1e-9)


def test_default_qubit_freq_hits_reference_error():
    from ionlink.config import QUBIT_FREQ_DEFAULT
    # 0.10(2)% window-averaging error in the reduced 3 ns window
    assert phase_averaging_infidelity(3e-9, QUBIT_FREQ_DEFAULT) == \
        pytest.approx(0.001, abs=2e-4)


def test_correlated_populations_ideal():
    state = ideal_pair_state(0.3).density()
    assert correlated_populations(state) == pytest.approx(1.0, abs=1e-12)


def test_correlation_scan_random_states_stay_bounded():
    from qutil import random_density
    rng = np.random.default_rng(19)
    for _ in range(5):
        state = random_density(rng, (2, 2))
        scan = correlation_scan(state, HWP_GRID)
        for series in scan.series.values():
            finite = series[np.isfinite(series)]
            assert np.all(finite >= -1e-12)
            assert np.all(finite <= 1.0 + 1e-12)
        assert scan.contrast <= 1.0 + 1e-9


def test_source_params_validation():
    with pytest.raises(ValueError):
        SourceParams(pol_mixing=1.2)
    with pytest.raises(ValueError):
        SourceParams(superposition_phase=7.0)
