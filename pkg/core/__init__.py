from .plugin_system.plugin_base import HookPoint, PluginBase, PluginMetadata
from .plugin_system.plugin_manager import PluginManager
from .kernels import KernelFamily, KernelSpec, design_matrix
from .regression import FitModel, RegressionManager
from .experiments import ExperimentConfig, ExperimentRunner

__all__ = [
    'HookPoint',
    'PluginBase',
    'PluginMetadata',
    'PluginManager',
    'KernelFamily',
    'KernelSpec',
    'design_matrix',
    'FitModel',
    'RegressionManager',
    'ExperimentConfig',
    'ExperimentRunner'
]
