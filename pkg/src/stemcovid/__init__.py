"""Collective spatio-temporal episodic memory for finding asymptomatic
COVID-19 carriers, plus the agent-based simulator used to evaluate it."""

__version__ = "0.1.0"
