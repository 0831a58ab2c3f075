"""Functional tests for hgpartners."""
