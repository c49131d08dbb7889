"""Intent-to-`tc` translation grounded in a queueing digital twin, with a rule-based critic."""

__version__ = "0.1.0"
