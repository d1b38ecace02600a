"""Essential CAN features kept after correlation pruning on the reference four-driver corpus, by category"""

FEATURE_CATALOG = {
    'Fuel': [
        'fuel_consumption',
        'short_term_fuel_trim_bank',
        'long_term_fuel_trim_bank',
        'intake_air_pressure',
        'engine_fuel_cut_off',
        'decreased_fuel_cut_off',
    ],
    'Engine': [
        'engine_speed',
        'current_spark_timing',
        'engine_coolant_temperature',
        'target_engine_idle_speed',
        'maximum_engine_torque',
        'minimum_engine_torque',
        'calculated_load_value',
        'standard_torque_ratio',
        'engine_torque_cutoff',
        'engine_speed_increase',
    ],
    'Transmission': [
        'friction_torque',
        'torque_converter_speed',
        'current_gear_level',
        'transmission_oil_temperature',
        'torque_converter_turbine_speed',
        'converter_clutch',
        'gear_choice',
        'steering_wheel_speed',
        'steering_wheel_angle',
        'front_left_wheel_speed',
        'front_right_wheel_speed',
        'rear_left_wheel_speed',
        'rear_right_wheel_speed',
    ],
    'Misc': ['car_speed', 'brake_switch', 'road_gradient'],
}


def catalog_features() -> list:
    return [name for names in FEATURE_CATALOG.values() for name in names]


def feature_category(name: str):
    for category, names in FEATURE_CATALOG.items():
        if name in names:
            return category
    return None
