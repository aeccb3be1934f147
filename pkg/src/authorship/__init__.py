"""Disambiguation, gender labeling and authorship analytics for Cyrillic/Latin bibliographic metadata."""

__version__ = "0.1.0"
