import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

class SettingsManager:
    """Manages application settings with persistence."""

    DEFAULT_SETTINGS = {
        "logging": {
            "enabled": True,
            "level": "INFO",
            "max_logs": 2,
            "file_logging": False,
            "console_logging": True
        },
        "numerics": {
            "rcond": 1e-10,
            "histogram_bins": 50,
            "m_ratio": 1.4,
            "zeta_ratio": 1.5,
            "runs": 3,
            "workers": 1
        }
    }

    def __init__(self, settings_file: Optional[str | Path] = None):
        self.settings_file = Path(settings_file) if settings_file else Path(__file__).parent / "settings.json"
        self.settings = self._load_settings()

    def _load_settings(self) -> dict:
        """Load settings from file or create with defaults."""
        if self.settings_file.exists():
            try:
                with open(self.settings_file, 'r', encoding='utf-8') as f:
                    return self._merge_with_defaults(json.load(f))
            except (OSError, ValueError) as e:
                logging.getLogger('SettingsManager').warning(
                    f"Ignoring unreadable settings file {self.settings_file}: {str(e)}"
                )
        return copy.deepcopy(self.DEFAULT_SETTINGS)

    def _merge_with_defaults(self, settings: dict) -> dict:
        """Ensure all default settings exist in loaded settings."""
        merged = copy.deepcopy(self.DEFAULT_SETTINGS)
        for category, values in settings.items():
            if category in merged and isinstance(values, dict):
                merged[category].update(values)
        return merged

    def save(self):
        """Save current settings to file."""
        self.settings_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.settings_file, 'w', encoding='utf-8') as f:
            json.dump(self.settings, f, indent=2)

    def get(self, category: str, key: str) -> Any:
        """Get a setting value."""
        return self.settings.get(category, {}).get(key)

    def section(self, category: str) -> Dict[str, Any]:
        """Get a copy of a whole settings category."""
        return dict(self.settings.get(category, {}))

    def set(self, category: str, key: str, value: Any):
        """Set a setting value."""
        if category not in self.settings:
            self.settings[category] = {}
        self.settings[category][key] = value
        self.save()

# Global settings manager instance
settings_manager = None

def init_settings_manager(settings_file: Optional[str | Path] = None):
    """Initialize the global settings manager."""
    global settings_manager
    settings_manager = SettingsManager(settings_file)
    return settings_manager
