import sys
import logging
from core.plugin_system.plugin_manager import PluginManager
from core.plugin_system.plugin_base import HookPoint
from core.regression import init_regression_manager
from core.experiments import init_experiment_runner
from core.settings_manager import init_settings_manager
from core.logging_config import configure_logging

def init_managers(plugin_manager):
    """Initialize all core managers."""
    regression = init_regression_manager(plugin_manager)
    init_experiment_runner(plugin_manager, regression)

def main(argv=None) -> int:
    """Main entry point for the application."""
    try:
        # Initialize settings first
        settings_manager = init_settings_manager()
        configure_logging(settings_manager)

        # Initialize plugin manager
        plugin_manager = PluginManager()
        plugin_manager.load_plugins()

        # Initialize core managers
        init_managers(plugin_manager)

        # Execute startup hooks
        plugin_manager.execute_hook(HookPoint.STARTUP.value)

        try:
            from cli_interface import main as cli_main
            return cli_main(argv, plugin_manager, settings_manager.section("numerics"))
        finally:
            # Execute shutdown hooks
            plugin_manager.execute_hook(HookPoint.SHUTDOWN.value)
            plugin_manager.cleanup()

    except KeyboardInterrupt:
        logging.info("Application terminated by user.")
        return 130
    except Exception as e:
        logging.error(f"An unexpected error occurred: {str(e)}", exc_info=True)
        print(f"error: {str(e)}", file=sys.stderr)
        return 1

if __name__ == "__main__":
    sys.exit(main())
