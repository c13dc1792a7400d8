"""Loader for the measured-constants corpus shipped with the package."""

import json
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def golden():
    """The corpus of measured convention-dependent constants, as a dict."""
    path = resources.files("ambientq").joinpath("data/golden.json")
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)
