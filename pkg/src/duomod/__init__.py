"""duomod: interactive dual-arm motion modulation workbench."""

__version__ = "0.1.0"
