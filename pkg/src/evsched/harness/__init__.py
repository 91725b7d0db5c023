from .io import default_scenario_path, load_scenario, read_profile, save_scenario, write_profile, write_trace
from .metrics import PolicyMetrics, evaluate
from .noise import ForecastNoise, apply_forecast_noise
from .sweep import RunSpec, compare_policies, format_comparison, parse_comparison
from .synth import synth_demand

__all__ = [
    "ForecastNoise",
    "PolicyMetrics",
    "RunSpec",
    "apply_forecast_noise",
    "compare_policies",
    "default_scenario_path",
    "evaluate",
    "format_comparison",
    "load_scenario",
    "parse_comparison",
    "read_profile",
    "save_scenario",
    "synth_demand",
    "write_profile",
    "write_trace",
]
