"""Tests for the pure demand toolkit."""
