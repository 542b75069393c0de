"""Leader-following consensus of double-integrator agents with time-varying coupling delays."""
from .digraph import LeaderTopology, WeightedDigraph
from .ddesim import DelayFunction, SimConfig, SwitchingSchedule, Trajectory, integrate
from .stability import analyze_fixed, analyze_switched

__all__ = [
    "WeightedDigraph",
    "LeaderTopology",
    "DelayFunction",
    "SwitchingSchedule",
    "SimConfig",
    "Trajectory",
    "integrate",
    "analyze_fixed",
    "analyze_switched",
]
__version__ = "0.1.0"
