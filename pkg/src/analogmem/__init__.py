"""Analog memory devices treated as noisy channels."""

__version__ = "0.1.0"

from .capacity import CapacityResult, blahut_arimoto, blahut_arimoto_constrained, mutual_information, uniform_capacity
from .channel import (
    ConditionalChannel,
    MeasurementSet,
    SynthPcmParams,
    discretize_reads,
    estimate_kde,
    gaussian_channel,
    read_measurements_csv,
    resistance_grid,
    restrict_writes,
    sample_measurements,
    synth_pcm_channel,
    voltage_grid,
    write_measurements_csv,
)
from .config import RunConfig, subseed
from .energy import EfficiencyPoint, EnergyModel, energy_sweep, min_energy_per_bit
from .errors import AnalogMemError, ConfigError, DataError, NumericalError
from .joint import CodingResult, MappingTable, SourceModel, coding_variants, evaluate, naive_mapping, solve_joint
from .levels import AnnealSchedule, LevelDesign, capacity_surface, exhaustive_read_levels, optimize_read_levels
from .rate_distortion import RDPoint, comparison_report, gaussian_rd_bound, lloyd_max, separate_bound_curve

__all__ = [n for n in dir() if not n.startswith("_")]
