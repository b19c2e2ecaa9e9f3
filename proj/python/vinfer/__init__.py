"""Python surface of the vinfer core: scoring, statistics, answer
normalization, and prompt composition."""

import importlib
import os
import sys


def _load_core():
    try:
        from . import _core
        return _core
    except ImportError:
        core_dir = os.environ.get("VINFER_CORE_DIR")
        if not core_dir:
            raise
        sys.path.insert(0, core_dir)
        try:
            return importlib.import_module("_core")
        finally:
            sys.path.remove(core_dir)


_core = _load_core()

score_pair = _core.score_pair
porter_stem = _core.porter_stem
mann_whitney = _core.mann_whitney
normalize_answer = _core.normalize_answer
match_answer = _core.match_answer
compose_variant = _core.compose_variant
compose_text_only = _core.compose_text_only
aggregate_likert = _core.aggregate_likert
flip_ratio = _core.flip_ratio
settings = _core.settings

__all__ = [
    "score_pair",
    "porter_stem",
    "mann_whitney",
    "normalize_answer",
    "match_answer",
    "compose_variant",
    "compose_text_only",
    "aggregate_likert",
    "flip_ratio",
    "settings",
]
