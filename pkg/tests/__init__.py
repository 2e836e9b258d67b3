"""Test suite for nudgecast."""
