"""Utility modules for the framework."""

