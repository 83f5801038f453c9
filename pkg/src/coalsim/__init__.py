"""Beta(a, b)-coalescent rates, small-time limits and an exact simulator."""

__version__ = "0.1.0"
