import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czrpe.calibrate import zz_cost
from czrpe.device import (
    ControlPoint, SurrogateBackend, SurrogateConfig, coarse_sweep, conditionality, conditionality_from_model,
    control_to_model, make_grid,
)
from czrpe.model import TARGETS, CzModelParams
from czrpe.sim import IDEAL, NoiseModel

NOISY = SurrogateConfig(noise_floor=NoiseModel(depolarizing_rate_per_cz=0.01), noise_slope=0.05)


def test_optimum_gives_target_entangling_angle_and_floor_noise():
    cfg = NOISY
    params, noise = control_to_model(cfg.optimum, cfg)
    assert params.theta_zz == -math.pi / 2
    assert noise == cfg.noise_floor
    # local angles are off target at the optimum, so virtual Z has work to do
    assert params.theta_iz != math.pi / 2 and params.theta_zi != math.pi / 2


def test_zero_drive_gives_no_entangling_angle():
    params, _ = control_to_model(ControlPoint(0.0, 0.3), SurrogateConfig())
    assert params.theta_zz == 0.0


def test_level_set_has_zero_cost_while_local_angle_varies():
    cfg = SurrogateConfig()
    iz = []
    for f in np.linspace(-0.6, 0.6, 13):
        # trace the theta_zz = -pi/2 locus analytically
        amp = cfg.amp_star * math.sqrt(1 + ((f - cfg.freq_star) / cfg.zz_linewidth) ** 2)
        params, _ = control_to_model(ControlPoint(amp, float(f)), cfg)
        assert zz_cost(params) < 1e-12
        iz.append(params.theta_iz)
    assert np.ptp(iz) > 0.05


def test_noise_grows_away_from_optimum_and_clamps():
    near = control_to_model(ControlPoint(1.05, 0.0), NOISY)[1].depolarizing_rate_per_cz
    far = control_to_model(ControlPoint(1.5, 0.4), NOISY)[1].depolarizing_rate_per_cz
    assert 0.01 < near < far
    huge = SurrogateConfig(noise_slope=10.0)
    assert control_to_model(ControlPoint(5.0, 5.0), huge)[1].depolarizing_rate_per_cz == 1.0


def test_control_point_validation():
    with pytest.raises(ValueError):
        ControlPoint(-0.1, 0.0)
    with pytest.raises(ValueError):
        ControlPoint(1.0, math.inf)


def test_conditionality_ideal_cz_is_two():
    assert conditionality_from_model(TARGETS, IDEAL, None, 0) == pytest.approx(2.0, abs=1e-12)


def test_conditionality_without_entangling_term_is_zero():
    params = CzModelParams(math.pi / 2, math.pi / 2, 0.0)
    assert conditionality_from_model(params, IDEAL, None, 0) == pytest.approx(0.0, abs=1e-12)


def test_conditionality_invariant_under_common_z_phase():
    base = CzModelParams(1.3, 1.6, -1.1)
    r = conditionality_from_model(base, IDEAL, None, 0)
    for shift in (0.2, -1.0, 2.5):
        moved = CzModelParams(base.theta_iz + shift, base.theta_zi, base.theta_zz)
        assert conditionality_from_model(moved, IDEAL, None, 0) == pytest.approx(r, abs=1e-12)
    assert r == pytest.approx(1 - math.cos(2 * base.theta_zz), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2), st.floats(-1, 1), st.integers(1, 200), st.integers(0, 2**32))
def test_conditionality_in_range(amp, freq, shots, seed):
    r = conditionality(ControlPoint(amp, freq), NOISY, shots, seed)
    assert 0.0 <= r <= 2.0


def test_conditionality_rejects_bad_shots():
    with pytest.raises(ValueError):
        conditionality(ControlPoint(1, 0), NOISY, 0, 0)


def test_sweep_argmax_single_point_and_empty_grid():
    grid = [ControlPoint(0.8, 0.1)]
    rows, best = coarse_sweep(grid, NOISY, 50, 1)
    assert best == grid[0] and len(rows) == 1
    with pytest.raises(ValueError):
        coarse_sweep([], NOISY, 50, 1)


def test_sweep_argmax_near_hidden_optimum():
    cfg = SurrogateConfig()
    amps, freqs = np.linspace(0.5, 1.3, 9), np.linspace(-0.5, 0.5, 9)
    grid = make_grid(amps, freqs)
    assert grid[0] == ControlPoint(0.5, -0.5) and grid[1] == ControlPoint(0.5, -0.375)
    _, best = coarse_sweep(grid, cfg, None, 0)
    assert best == cfg.optimum
    _, best = coarse_sweep(grid, cfg, 20_000, 0)
    assert abs(best.amplitude - cfg.amp_star) <= 0.1 + 1e-12
    assert abs(best.frequency - cfg.freq_star) <= 0.125 + 1e-12


def test_doubling_shots_shrinks_spread_by_sqrt_two():
    cfg = SurrogateConfig()
    point = ControlPoint(math.sqrt(0.5), 0.0)  # theta_zz = -pi/4, R = 1
    spread = []
    for shots in (400, 800):
        values = [conditionality(point, cfg, shots, seed) for seed in range(100)]
        spread.append(np.std(values, ddof=1))
    assert 1.15 < spread[0] / spread[1] < 1.7


def test_control_to_model_is_lipschitz():
    rng = np.random.default_rng(4)
    eps = 1e-6
    for _ in range(100):
        a, f = rng.uniform(0.2, 1.6), rng.uniform(-0.8, 0.8)
        base = control_to_model(ControlPoint(a, f), NOISY)[0].as_array()
        for da, df in ((eps, 0), (0, eps)):
            moved = control_to_model(ControlPoint(a + da, f + df), NOISY)[0].as_array()
            assert np.max(np.abs(moved - base)) < 10 * eps


def test_backend_virtual_z_shifts_local_angles_only():
    backend = SurrogateBackend(NOISY)
    point = ControlPoint(0.9, 0.05)
    p0, n0 = backend.model_at(point)
    p1, n1 = backend.apply_virtual_z(0.1, -0.2).apply_virtual_z(0.01, 0.0).model_at(point)
    assert p1.theta_iz == pytest.approx(p0.theta_iz + 0.11)
    assert p1.theta_zi == pytest.approx(p0.theta_zi - 0.2)
    assert p1.theta_zz == p0.theta_zz and n1 == n0
