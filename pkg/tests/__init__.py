"""Tests for hgpartners."""
