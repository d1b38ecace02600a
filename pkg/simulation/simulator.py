import numpy as np
from loguru import logger

from input_output.traces import CanTrace
from simulation.profiles import DriverProfile

SIM_FEATURES = (
    'car_speed',
    'front_left_wheel_speed',
    'front_right_wheel_speed',
    'rear_left_wheel_speed',
    'rear_right_wheel_speed',
    'brake_switch',
    'engine_speed',
    'torque_converter_speed',
    'current_gear_level',
    'calculated_load_value',
    'fuel_consumption',
    'intake_air_pressure',
    'engine_coolant_temperature',
    'steering_wheel_angle',
    'steering_wheel_speed',
    'road_gradient',
)

SPEED_REVERSION = 0.1  # OU mean reversion of the target-speed drift, 1/s
STEERING_REVERSION = 0.2
GRADIENT_REVERSION = 0.02
GRADIENT_STD = 2.0  # percent
RPM_PER_KMH = (110.0, 65.0, 44.0, 34.0, 28.0, 23.0)  # gears 1..6
IDLE_RPM = 750.0
WHEEL_SLIP = 0.015
BRAKE_DURATION_S = (2, 5)


def _ou_step(value: float, reversion: float, std: float, rng: np.random.Generator) -> float:
    """One unit-time Ornstein-Uhlenbeck step around 0 with stationary standard deviation std"""
    return value - reversion * value + std * np.sqrt(2.0 * reversion) * rng.standard_normal()


def select_gear(speed_kmh: float, gearshift_rpm: float) -> int:
    """Lowest gear whose engine speed stays at or below the shift point"""
    for gear, ratio in enumerate(RPM_PER_KMH, start=1):
        if speed_kmh * ratio <= gearshift_rpm:
            return gear
    return len(RPM_PER_KMH)


def synth_trace(profile: DriverProfile, duration_s: int, seed: int) -> CanTrace:
    """
    Simulates a 1 Hz CAN trace for one driver.

    The target speed drifts around the cruise speed as an Ornstein-Uhlenbeck process, the car tracks it with
    the profile's throttle gain, and Poisson brake events (2-5 s each) decelerate it with the brake switch on.
    Gear, engine and converter speeds follow the speed through fixed gear ratios; wheel speeds add independent
    noise of at most 1.5 %. Identical profile, duration and seed give an identical trace.
    """
    if duration_s < 1:
        raise ValueError(f'duration_s must be at least 1, got {duration_s}')
    rng = np.random.default_rng(seed)
    brake_probability = 1.0 - np.exp(-profile.brake_frequency_per_min / 60.0)
    decel_kmh_s = 3.0 + 5.0 * profile.accel_aggressiveness

    data = np.zeros((duration_s, len(SIM_FEATURES)))
    column = {name: index for index, name in enumerate(SIM_FEATURES)}
    speed = profile.cruise_speed_kmh
    drift, steering, gradient = 0.0, 0.0, 0.0
    coolant = 70.0 + 5.0 * rng.random()
    brake_left = 0

    for t in range(duration_s):
        drift = _ou_step(drift, SPEED_REVERSION, profile.speed_variability, rng)
        gradient = _ou_step(gradient, GRADIENT_REVERSION, GRADIENT_STD, rng)
        previous_steering = steering
        steering = _ou_step(steering, STEERING_REVERSION, profile.steering_noise_deg, rng)

        if brake_left == 0 and profile.brake_frequency_per_min > 0 and rng.random() < brake_probability:
            brake_left = int(rng.integers(BRAKE_DURATION_S[0], BRAKE_DURATION_S[1] + 1))
        braking = brake_left > 0
        previous_speed = speed
        if braking:
            speed -= decel_kmh_s * (0.8 + 0.4 * rng.random())
            brake_left -= 1
        else:
            target = profile.cruise_speed_kmh + drift
            speed += profile.accel_aggressiveness * (target - speed) - 0.05 * gradient + 0.3 * rng.standard_normal()
        speed = max(speed, 0.0)
        accel = speed - previous_speed

        gear = select_gear(speed, profile.gearshift_rpm)
        engine_speed = max(IDLE_RPM, speed * RPM_PER_KMH[gear - 1]) + 10.0 * rng.standard_normal()
        converter_speed = engine_speed * (0.97 + 0.02 * rng.random())
        load = 18.0 + 0.25 * speed + 9.0 * max(accel, 0.0) + 3.0 * gradient + 2.0 * rng.standard_normal()
        load = float(np.clip(load, 0.0, 100.0))
        if braking:
            load = 0.0
            fuel = 0.2 + 0.05 * rng.random()
        else:
            fuel = max(0.4 + 2.5e-5 * engine_speed * load + 0.05 * rng.standard_normal(), 0.0)
        coolant += 0.01 * (90.0 - coolant) + 0.002 * load + 0.05 * rng.standard_normal()

        row = data[t]
        row[column['car_speed']] = speed
        for wheel in ('front_left', 'front_right', 'rear_left', 'rear_right'):
            row[column[f'{wheel}_wheel_speed']] = speed * (1.0 + rng.uniform(-WHEEL_SLIP, WHEEL_SLIP))
        row[column['brake_switch']] = 1.0 if braking else 0.0
        row[column['engine_speed']] = engine_speed
        row[column['torque_converter_speed']] = converter_speed
        row[column['current_gear_level']] = gear
        row[column['calculated_load_value']] = load
        row[column['fuel_consumption']] = fuel
        row[column['intake_air_pressure']] = 30.0 + 0.7 * load + 1.5 * rng.standard_normal()
        row[column['engine_coolant_temperature']] = coolant
        row[column['steering_wheel_angle']] = steering
        row[column['steering_wheel_speed']] = abs(steering - previous_steering)
        row[column['road_gradient']] = gradient

    logger.info(f'Simulated driver {profile.name}: {duration_s} s, {len(SIM_FEATURES)} features (seed {seed})')
    return CanTrace(
        trace_id=f'{profile.name}_seed{seed}',
        feature_names=SIM_FEATURES,
        samples=np.round(data, 4),
        driver_label=profile.name,
    )
