"""ctkit: interactive 3D CT analysis as verifiable tool calls.

A NIfTI-backed volume workspace, a 24-tool suite exposed over
newline-delimited JSON-RPC, an agent loop that records full
thought/action/observation trajectories, and an evaluation kit that
re-executes trajectories for step-level consistency checking.
"""

__version__ = "0.1.0"

from .volume import Volume, apply_window, inspect_metadata, list_window_presets, parse_nifti, write_nifti
from .morphometry import MaskVolume, load_mask
from .server import Server, Toolbox
from .orchestrate import AgentMove, FinalAnswer, ScriptedAgent, ToolCall, Trajectory, run_episode
from .evalkit import TaskCase, load_task_manifest, randomize_options, score_accuracy, validate_trajectory

__all__ = [
    "__version__",
    "Volume",
    "apply_window",
    "inspect_metadata",
    "list_window_presets",
    "parse_nifti",
    "write_nifti",
    "MaskVolume",
    "load_mask",
    "Server",
    "Toolbox",
    "AgentMove",
    "FinalAnswer",
    "ScriptedAgent",
    "ToolCall",
    "Trajectory",
    "run_episode",
    "TaskCase",
    "load_task_manifest",
    "randomize_options",
    "score_accuracy",
    "validate_trajectory",
]
