"""Shared pytest setup; keeps this directory importable for oracle helpers."""
