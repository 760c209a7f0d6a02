"""Orchestration: the session loop, structured logging, the telemetry bus,
configuration, the CLI, and the UI backend."""
