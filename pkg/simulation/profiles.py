import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence


class UnknownProfileError(ValueError):
    pass


@dataclass(frozen=True)
class DriverProfile:
    name: str
    cruise_speed_kmh: float
    accel_aggressiveness: float  # gain of the speed-tracking controller, in (0, 1]
    brake_frequency_per_min: float
    steering_noise_deg: float
    gearshift_rpm: float
    speed_variability: float  # stationary std of the target-speed drift, km/h

    def __post_init__(self):
        if not self.name:
            raise ValueError('A driver profile needs a name')
        if self.cruise_speed_kmh <= 0:
            raise ValueError(f'{self.name}: cruise_speed_kmh must be positive, got {self.cruise_speed_kmh}')
        if not 0 < self.accel_aggressiveness <= 1:
            raise ValueError(f'{self.name}: accel_aggressiveness must be in (0, 1], got {self.accel_aggressiveness}')
        for field_name in ('brake_frequency_per_min', 'steering_noise_deg', 'speed_variability'):
            if getattr(self, field_name) < 0:
                raise ValueError(f'{self.name}: {field_name} must be non-negative, got {getattr(self, field_name)}')
        if self.gearshift_rpm <= 0:
            raise ValueError(f'{self.name}: gearshift_rpm must be positive, got {self.gearshift_rpm}')

    def to_dict(self) -> dict:
        return asdict(self)


def default_profiles() -> list:
    """
    Four fixed drivers:
    - A calm: slow cruise, gentle throttle, rare braking, late-ish shifts
    - B aggressive: quick throttle response, frequent steering corrections, high shift points
    - C heavy braker: moderate cruise with frequent brake events
    - D fast cruiser: highest cruise speed, smooth steering, rare braking
    """
    return [
        DriverProfile('A', 50.0, 0.15, 0.5, 2.0, 2000.0, 2.0),
        DriverProfile('B', 65.0, 0.6, 1.5, 6.0, 3200.0, 5.0),
        DriverProfile('C', 55.0, 0.3, 4.0, 3.0, 2400.0, 3.0),
        DriverProfile('D', 80.0, 0.35, 0.3, 1.5, 2700.0, 3.0),
    ]


def profile_by_name(name: str, profiles: Sequence[DriverProfile] = None) -> DriverProfile:
    profiles = default_profiles() if profiles is None else profiles
    for profile in profiles:
        if profile.name == name:
            return profile
    raise UnknownProfileError(f'Unknown driver profile {name!r}, known: {[profile.name for profile in profiles]}')


def load_profiles(path) -> list:
    """Reads one profile object or a list of them from a JSON file"""
    document = json.loads(Path(path).read_text(encoding='utf-8'))
    if isinstance(document, dict):
        document = [document]
    try:
        return [DriverProfile(**item) for item in document]
    except TypeError as error:
        raise ValueError(f'{path}: invalid driver profile ({error})') from error


def dump_profiles(profiles: Sequence[DriverProfile], path) -> None:
    Path(path).write_text(json.dumps([profile.to_dict() for profile in profiles], indent=2) + '\n', encoding='utf-8')
