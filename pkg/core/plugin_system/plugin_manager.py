import json
import zipfile
import importlib.util
import sys
import logging
from pathlib import Path
from typing import Dict, List, Any, Callable, Optional
from .plugin_base import PluginBase, PluginMetadata, HookPoint

class PluginManager:
    """Manages plugin loading, unloading, and hook execution."""

    def __init__(self, plugins_dir: str | Path = "plugins"):
        self.plugins_dir = Path(plugins_dir)
        self.plugins: Dict[str, PluginBase] = {}
        self.hooks: Dict[str, List[Callable[..., Any]]] = {}

        # Initialize hook points
        for hook in HookPoint:
            self.hooks[hook.value] = []

        self.logger = logging.getLogger('PluginManager')

    def load_plugins(self) -> None:
        """Load all plugins found in the plugins directory."""
        if not self.plugins_dir.is_dir():
            self.logger.debug(f"No plugins directory at {self.plugins_dir}")
            return

        self.logger.info("Loading plugins...")
        for item in sorted(self.plugins_dir.iterdir()):
            try:
                if item.suffix == '.zip':
                    self.load_plugin(item)
                elif item.is_dir() and (item / 'plugin.py').exists():
                    self.load_plugin_dir(item)
            except Exception as e:
                self.logger.error(f"Failed to load plugin {item.name}: {str(e)}")

    def load_plugin_dir(self, plugin_path: str | Path) -> bool:
        """Load a plugin unpacked into a directory."""
        plugin_path = Path(plugin_path)
        plugin_name = plugin_path.name
        try:
            with open(plugin_path / 'metadata.json', 'r', encoding='utf-8') as f:
                metadata = PluginMetadata.from_dict(json.load(f))

            module_name = f"kernelzeta_plugin_{plugin_name}"
            spec = importlib.util.spec_from_file_location(module_name, plugin_path / 'plugin.py')
            module = importlib.util.module_from_spec(spec)
            sys.modules[module_name] = module
            spec.loader.exec_module(module)

            return self._activate(plugin_name, getattr(module, 'Plugin')(), metadata)

        except Exception as e:
            self.logger.error(f"Failed to load plugin {plugin_path}: {str(e)}")
            return False

    def load_plugin(self, plugin_path: str | Path) -> bool:
        """Load a single plugin from zip file."""
        plugin_path = Path(plugin_path)
        plugin_name = plugin_path.stem
        try:
            with zipfile.ZipFile(plugin_path, 'r') as zip_ref:
                with zip_ref.open('metadata.json') as f:
                    metadata = PluginMetadata.from_dict(json.loads(f.read().decode('utf-8')))
                with zip_ref.open('plugin.py') as f:
                    plugin_code = f.read().decode('utf-8')

            module_name = f"kernelzeta_plugin_{plugin_name}"
            spec = importlib.util.spec_from_loader(module_name, loader=None)
            module = importlib.util.module_from_spec(spec)
            exec(compile(plugin_code, str(plugin_path), 'exec'), module.__dict__)
            sys.modules[module_name] = module

            return self._activate(plugin_name, getattr(module, 'Plugin')(), metadata)

        except Exception as e:
            self.logger.error(f"Failed to load plugin {plugin_path}: {str(e)}")
            return False

    def _activate(self, plugin_name: str, plugin: PluginBase, metadata: PluginMetadata) -> bool:
        """Initialize a freshly loaded plugin and register its hooks."""
        plugin.metadata = metadata
        if not self._validate_dependencies(metadata):
            return False
        if not plugin.initialize():
            self.logger.warning(f"Plugin {metadata.name} declined to initialize")
            return False

        self.plugins[plugin_name] = plugin
        self._register_hooks(plugin)
        self.logger.info(f"Successfully loaded plugin: {metadata.name} v{metadata.version}")
        return True

    def _validate_dependencies(self, metadata: PluginMetadata) -> bool:
        """Validate plugin dependencies."""
        for dependency in metadata.dependencies:
            if dependency not in self.plugins:
                self.logger.error(f"Missing dependency for {metadata.name}: {dependency}")
                return False
        return True

    def _register_hooks(self, plugin: PluginBase) -> None:
        """Register all hooks provided by the plugin."""
        for hook_point, handler in plugin.get_hook_handlers().items():
            self.register_handler(hook_point, handler)

    def register_handler(self, hook_point: str | HookPoint, handler: Callable[..., Any]) -> None:
        """Attach a handler to a hook point."""
        if isinstance(hook_point, HookPoint):
            hook_point = hook_point.value
        if hook_point not in self.hooks:
            self.logger.warning(f"Ignoring handler for unknown hook point: {hook_point}")
            return
        self.hooks[hook_point].append(handler)

    def execute_hook(self, hook_point: str, **kwargs) -> List[Any]:
        """Execute all handlers for a given hook point."""
        results = []
        for handler in self.hooks.get(hook_point, []):
            try:
                results.append(handler(**kwargs))
            except Exception as e:
                self.logger.error(f"Error executing hook {hook_point}: {str(e)}")
        return results

    def cleanup(self) -> None:
        """Clean up all plugins."""
        for plugin_name, plugin in self.plugins.items():
            try:
                plugin.cleanup()
                self.logger.info(f"Cleaned up plugin: {plugin_name}")
            except Exception as e:
                self.logger.error(f"Error cleaning up plugin {plugin_name}: {str(e)}")

        self.plugins.clear()
        for hook_list in self.hooks.values():
            hook_list.clear()

def fire_hook(plugin_manager: Optional[PluginManager], hook_point: HookPoint, **kwargs) -> List[Any]:
    """Execute a hook if a plugin manager is present, never raising."""
    if plugin_manager is None:
        return []
    try:
        return plugin_manager.execute_hook(hook_point.value, **kwargs)
    except Exception as e:
        logging.getLogger('PluginManager').error(f"Plugin error during {hook_point.value}: {str(e)}")
        return []
