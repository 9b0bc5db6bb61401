"""Figure rendering for set-membership fault-diagnosis run logs."""

from .figures import PlotSpec, plot_fps_snapshots, plot_parameter_traces
from .io import SchemaError, load_run, load_snapshots

__version__ = "0.1.0"

__all__ = [
    "PlotSpec",
    "plot_parameter_traces",
    "plot_fps_snapshots",
    "SchemaError",
    "load_run",
    "load_snapshots",
]
