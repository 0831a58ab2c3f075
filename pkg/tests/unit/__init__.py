"""Unit tests for hgpartners."""
