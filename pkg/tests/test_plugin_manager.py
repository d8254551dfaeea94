import json
import zipfile

from core.plugin_system.plugin_base import HookPoint, PluginMetadata
from core.plugin_system.plugin_manager import PluginManager, fire_hook

PLUGIN_SOURCE = '''
from core.plugin_system.plugin_base import PluginBase

class Plugin(PluginBase):
    def __init__(self):
        super().__init__()
        self.cells = []

    def initialize(self):
        return True

    def cleanup(self):
        return True

    def get_hook_handlers(self):
        return {"scan_cell": lambda cell: self.cells.append(cell), "post_fit": lambda **kw: "seen"}
'''

def write_plugin_dir(root, name, metadata):
    plugin_dir = root / name
    plugin_dir.mkdir(parents=True)
    (plugin_dir / "plugin.py").write_text(PLUGIN_SOURCE, encoding="utf-8")
    (plugin_dir / "metadata.json").write_text(json.dumps(metadata), encoding="utf-8")

def test_missing_directory_is_not_an_error(tmp_path):
    manager = PluginManager(tmp_path / "nowhere")
    manager.load_plugins()
    assert manager.plugins == {}

def test_loads_directory_plugin(tmp_path):
    write_plugin_dir(tmp_path, "recorder", {"name": "Recorder", "version": "1.2.0"})
    manager = PluginManager(tmp_path)
    manager.load_plugins()
    assert list(manager.plugins) == ["recorder"]
    assert manager.plugins["recorder"].metadata.version == "1.2.0"
    assert manager.execute_hook(HookPoint.POST_FIT.value, model=None) == ["seen"]

def test_loads_zip_plugin(tmp_path):
    archive = tmp_path / "zipped.zip"
    with zipfile.ZipFile(archive, "w") as zf:
        zf.writestr("plugin.py", PLUGIN_SOURCE)
        zf.writestr("metadata.json", json.dumps({"name": "Zipped"}))
    manager = PluginManager(tmp_path)
    assert manager.load_plugin(archive)
    assert "zipped" in manager.plugins

def test_missing_dependency_rejected(tmp_path):
    write_plugin_dir(tmp_path, "needy", {"name": "Needy", "dependencies": ["absent"]})
    manager = PluginManager(tmp_path)
    manager.load_plugins()
    assert manager.plugins == {}

def test_handler_errors_are_isolated(tmp_path):
    manager = PluginManager(tmp_path)
    calls = []

    def broken(**kwargs):
        raise RuntimeError("boom")

    manager.register_handler(HookPoint.PRE_SCAN, broken)
    manager.register_handler(HookPoint.PRE_SCAN, lambda **kw: calls.append(kw) or "ok")
    assert fire_hook(manager, HookPoint.PRE_SCAN, config=None) == ["ok"]
    assert calls == [{"config": None}]

def test_unknown_hook_point_ignored(tmp_path):
    manager = PluginManager(tmp_path)
    manager.register_handler("not_a_hook", lambda: None)
    assert "not_a_hook" not in manager.hooks

def test_fire_hook_without_manager():
    assert fire_hook(None, HookPoint.STARTUP) == []

def test_cleanup_clears_hooks(tmp_path):
    write_plugin_dir(tmp_path, "recorder", {"name": "Recorder"})
    manager = PluginManager(tmp_path)
    manager.load_plugins()
    manager.cleanup()
    assert manager.plugins == {}
    assert manager.execute_hook(HookPoint.POST_FIT.value) == []

def test_metadata_defaults():
    metadata = PluginMetadata.from_dict({"name": "x"})
    assert (metadata.version, metadata.dependencies) == ("0.0.1", [])
