"""Test suite for the automation framework."""

