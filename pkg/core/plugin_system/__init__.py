from .plugin_base import HookPoint, PluginBase, PluginMetadata
from .plugin_manager import PluginManager, fire_hook

__all__ = [
    'HookPoint',
    'PluginBase',
    'PluginMetadata',
    'PluginManager',
    'fire_hook'
]
