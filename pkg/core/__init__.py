"""Core package."""

