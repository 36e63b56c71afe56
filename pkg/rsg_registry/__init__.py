"""Packaged dataset registry and published reference numbers."""
