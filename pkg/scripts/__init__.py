# Command modules loaded by core.command_manager.
