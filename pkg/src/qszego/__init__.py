"""Quaternionic Heisenberg group analysis toolkit."""
