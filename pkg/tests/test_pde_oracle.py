import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnls.core import (
    BlowUp,
    NotEven,
    SampledField,
    SpatialGrid,
    TailContamination,
    stationary_soliton,
)
from bnls.pde_oracle import (
    SimConfig,
    conserved_quantities,
    discrete_energy,
    robin_residual,
    simulate,
)
from oracles import free_soliton_abs

Q = 0.25
GRID = SpatialGrid.symmetric(20.0, 2001)


def soliton(grid=GRID, q=Q):
    return SampledField(grid, stationary_soliton(1.0, q, grid.x).astype(complex))


def weighted_mass(u):
    """h (|u_0|^2 / 2 + sum_{j>0} |u_j|^2), conserved exactly by the scheme."""
    half = u.values[u.grid.zero_index():]
    return u.grid.h * (np.sum(np.abs(half) ** 2) - 0.5 * abs(half[0]) ** 2)


def test_stationary_soliton():
    u0 = soliton()
    snaps = simulate(u0, SimConfig(GRID, 0.005, 1.0, Q), [0.5, 1.0])
    for s in snaps:
        assert np.max(np.abs(np.abs(s.values) - np.abs(u0.values))) < 5e-4


def test_zero_stays_zero():
    snaps = simulate(SampledField.zeros(GRID), SimConfig(GRID, 0.01, 1.0, Q), [1.0])
    assert np.all(snaps[0].values == 0)


def test_free_soliton_without_delta():
    grid = SpatialGrid.symmetric(30.0, 3001)
    u0 = SampledField(grid, (1 / np.cosh(grid.x)).astype(complex))
    times = [1.0, 2.5, 5.0]
    snaps = simulate(u0, SimConfig(grid, 0.005, 5.0, 0.0), times)
    k = grid.zero_index()
    for t, s in zip(times, snaps):
        assert abs(abs(s.values[k]) - 1.0) < 5e-4
        assert np.max(np.abs(np.abs(s.values) - free_soliton_abs(grid.x, t))) < 5e-4


def test_snapshots_stay_exactly_even():
    x = GRID.x
    u0 = SampledField(GRID, (stationary_soliton(1.0, Q, x) + 0.1 * np.exp(-x * x) * np.cos(2 * x))
                      .astype(complex))
    for s in simulate(u0, SimConfig(GRID, 0.01, 1.0, Q), [0.3, 1.0]):
        np.testing.assert_array_equal(s.values, s.values[::-1])


def test_conserved_quantities_of_soliton():
    c = conserved_quantities(soliton(SpatialGrid.symmetric(20.0, 4001)), Q)
    assert c.mass == pytest.approx(1 - Q, abs=1e-4)
    # int_q^1 (2T^2 - 1) dT - q (1 - q^2) for the profile sech(x + atanh q)
    assert c.energy == pytest.approx(-1 / 3 + Q ** 3 / 3, abs=1e-4)
    zero = conserved_quantities(SampledField.zeros(GRID), Q)
    assert zero["mass"] == 0 and zero["energy"] == 0


def test_conservation_and_drift_reduction():
    u0 = soliton()
    monitor = []
    end = simulate(u0, SimConfig(GRID, 0.005, 1.0, Q), [1.0], monitor=monitor, monitor_every=50)[0]
    c0, c1 = conserved_quantities(u0, Q), conserved_quantities(end, Q)
    assert abs(c1.mass - c0.mass) / c0.mass < 1e-6
    assert abs(c1.energy - c0.energy) < 1e-5
    assert [round(m[0], 6) for m in monitor] == [0.25, 0.5, 0.75, 1.0]
    drift = abs(discrete_energy(end, Q) - discrete_energy(u0, Q))
    half = simulate(u0, SimConfig(GRID, 0.0025, 1.0, Q), [1.0])[0]
    assert drift / abs(discrete_energy(half, Q) - discrete_energy(u0, Q)) >= 3.5


@settings(max_examples=15, deadline=None)
@given(amp=st.floats(0.2, 1.2), width=st.floats(0.5, 2.0), q=st.floats(-0.5, 0.5))
def test_weighted_mass_is_conserved(amp, width, q):
    grid = SpatialGrid.symmetric(15.0, 601)
    u0 = SampledField(grid, (amp * np.exp(-(grid.x / width) ** 2)).astype(complex))
    end = simulate(u0, SimConfig(grid, 0.02, 0.4, q), [0.4])[0]
    assert weighted_mass(end) == pytest.approx(weighted_mass(u0), rel=1e-12)


def test_robin_residual_is_first_order():
    res = []
    for n in (1001, 2001, 4001):
        grid = SpatialGrid.symmetric(20.0, n)
        end = simulate(soliton(grid), SimConfig(grid, 0.01, 0.5, Q), [0.5])[0]
        res.append(abs(robin_residual(end, Q)))
    assert 1.7 < res[0] / res[1] < 2.3 and 1.7 < res[1] / res[2] < 2.3


def test_guards():
    u0 = SampledField(GRID, (3 / np.cosh(GRID.x)).astype(complex))
    with pytest.raises(BlowUp):
        simulate(u0, SimConfig(GRID, 0.005, 5.0, 5.0, blowup_factor=1.5), [5.0])
    with pytest.raises(TailContamination):
        simulate(u0, SimConfig(GRID, 0.005, 5.0, 5.0), [5.0])
    wide = SampledField(GRID, np.full(GRID.n_points, 0.1, dtype=complex))
    with pytest.raises(TailContamination):
        simulate(wide, SimConfig(GRID, 0.01, 1.0, Q), [1.0])


def test_input_validation():
    odd = SampledField(GRID, np.exp(-(GRID.x - 1) ** 2).astype(complex))
    with pytest.raises(NotEven):
        simulate(odd, SimConfig(GRID, 0.01, 1.0, Q), [1.0])
    cfg = SimConfig(GRID, 0.01, 1.0, Q)
    with pytest.raises(ValueError):
        simulate(soliton(), cfg, [0.015])
    with pytest.raises(ValueError):
        simulate(soliton(), cfg, [0.5, 0.2])
    with pytest.raises(ValueError):
        simulate(soliton(), cfg, [2.0])
    for bad in (dict(dt=0.05), dict(dt=0.0), dict(t_end=-1.0), dict(blowup_factor=1.0),
                dict(boundary="periodic")):
        kw = dict(grid=GRID, dt=0.01, t_end=1.0, q=Q) | bad
        with pytest.raises(ValueError):
            SimConfig(**kw)
    with pytest.raises(ValueError):
        SimConfig(SpatialGrid(-1.0, 2.0, 31), 0.01, 1.0, Q)
