"""Tests for flusim package."""
