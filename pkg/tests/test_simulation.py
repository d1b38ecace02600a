import dataclasses
import json

import numpy as np
import pytest

from preprocessing.feature_catalog import catalog_features
from simulation.profiles import (
    DriverProfile,
    UnknownProfileError,
    default_profiles,
    dump_profiles,
    load_profiles,
    profile_by_name,
)
from simulation.simulator import SIM_FEATURES, select_gear, synth_trace

WHEELS = ('front_left_wheel_speed', 'front_right_wheel_speed', 'rear_left_wheel_speed', 'rear_right_wheel_speed')


def test_synth_trace_shape_and_labels(profiles):
    trace = synth_trace(profiles['C'], 60, seed=0)
    assert trace.duration_s == 60
    assert trace.feature_names == SIM_FEATURES
    assert trace.driver_label == 'C'
    assert trace.trace_id == 'C_seed0'
    assert not np.isnan(trace.samples).any()


def test_synth_trace_is_deterministic(profiles):
    first = synth_trace(profiles['B'], 120, seed=7)
    np.testing.assert_array_equal(first.samples, synth_trace(profiles['B'], 120, seed=7).samples)
    assert not np.array_equal(first.samples, synth_trace(profiles['B'], 120, seed=8).samples)


def test_synth_trace_rejects_empty_duration(profiles):
    with pytest.raises(ValueError):
        synth_trace(profiles['A'], 0, seed=0)


def test_no_braking_without_brake_events(profiles):
    calm = dataclasses.replace(profiles['A'], brake_frequency_per_min=0.0)
    trace = synth_trace(calm, 600, seed=3)
    assert (trace.column('brake_switch') == 0.0).all()


def test_simulated_signals_are_physically_consistent(profiles):
    for profile in profiles.values():
        trace = synth_trace(profile, 600, seed=5)
        speed = trace.column('car_speed')
        assert (speed >= 0).all()
        assert set(np.unique(trace.column('brake_switch'))) <= {0.0, 1.0}
        moving = speed > 1.0
        for wheel in WHEELS:
            assert (np.abs(trace.column(wheel)[moving] - speed[moving]) <= 0.05 * speed[moving]).all()
        gears = trace.column('current_gear_level')
        assert gears.min() >= 1 and gears.max() <= 6
        load = trace.column('calculated_load_value')
        assert load.min() >= 0 and load.max() <= 100


def test_simulated_features_come_from_the_catalog():
    known = set(catalog_features())
    assert len([name for name in SIM_FEATURES if name in known]) >= 12


def test_select_gear_respects_shift_point():
    assert select_gear(0.0, 2000.0) == 1
    assert select_gear(50.0, 2000.0) == 4
    assert select_gear(50.0, 2400.0) == 3
    assert select_gear(400.0, 2000.0) == 6


def test_drivers_differ_in_mean_speed(profiles):
    calm = synth_trace(profiles['A'], 600, seed=1).column('car_speed').mean()
    aggressive = synth_trace(profiles['B'], 600, seed=1).column('car_speed').mean()
    assert abs(calm - aggressive) >= 5.0


def test_same_driver_is_stable_across_long_trips(profiles):
    first = synth_trace(profiles['A'], 3600, seed=30).column('car_speed').mean()
    second = synth_trace(profiles['A'], 3600, seed=31).column('car_speed').mean()
    assert abs(first - second) < 2.0


def _window_means(trace, features, length=33):
    data = trace.select(features)
    starts = range(0, trace.duration_s - length + 1, length)
    return np.array([data[start : start + length].mean(axis=0) for start in starts])


def test_drivers_are_separable_by_window_means(profiles):
    features = [name for name in SIM_FEATURES if name not in WHEELS]
    train = {name: _window_means(synth_trace(profile, 1200, seed=40), features) for name, profile in profiles.items()}
    test = {name: _window_means(synth_trace(profile, 600, seed=41), features) for name, profile in profiles.items()}

    pooled = np.concatenate(list(train.values()))
    mean, std = pooled.mean(axis=0), pooled.std(axis=0)
    std[std == 0] = 1.0
    names = list(train)
    centroids = np.stack([((train[name] - mean) / std).mean(axis=0) for name in names])

    correct = total = 0
    for name, windows in test.items():
        scaled = (windows - mean) / std
        nearest = np.argmin(((scaled[:, np.newaxis, :] - centroids[np.newaxis]) ** 2).sum(axis=2), axis=1)
        correct += int(np.sum(np.array(names)[nearest] == name))
        total += len(windows)
    assert correct / total >= 0.9


def test_default_profiles_are_distinct(profiles):
    assert sorted(profiles) == ['A', 'B', 'C', 'D']
    assert profiles['A'].accel_aggressiveness < profiles['B'].accel_aggressiveness
    assert len(set(default_profiles())) == 4


def test_profile_by_name():
    assert profile_by_name('D').cruise_speed_kmh == 80.0
    with pytest.raises(UnknownProfileError, match='Z'):
        profile_by_name('Z')


def test_profile_validation():
    with pytest.raises(ValueError):
        DriverProfile('X', -1.0, 0.5, 1.0, 1.0, 2000.0, 1.0)
    with pytest.raises(ValueError):
        DriverProfile('X', 50.0, 1.5, 1.0, 1.0, 2000.0, 1.0)
    with pytest.raises(ValueError):
        DriverProfile('', 50.0, 0.5, 1.0, 1.0, 2000.0, 1.0)


def test_dump_and_load_profiles(tmp_path):
    path = tmp_path / 'profiles.json'
    dump_profiles(default_profiles(), path)
    assert load_profiles(path) == default_profiles()

    single = tmp_path / 'single.json'
    single.write_text(json.dumps(default_profiles()[0].to_dict()))
    assert load_profiles(single) == [default_profiles()[0]]

    broken = tmp_path / 'broken.json'
    broken.write_text(json.dumps({'name': 'X', 'top_speed': 3}))
    with pytest.raises(ValueError):
        load_profiles(broken)
