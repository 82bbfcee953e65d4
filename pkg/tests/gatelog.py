"""Verdict lines collected by the release gates, printed after the run."""

lines: list[str] = []
