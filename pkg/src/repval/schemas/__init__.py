"""JSON schemas for games, strategies and CLI reports."""
import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import InvariantViolation


@lru_cache(maxsize=None)
def load(name: str) -> dict:
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name: str) -> None:
    try:
        jsonschema.validate(obj, load(name))
    except jsonschema.ValidationError as exc:
        raise InvariantViolation(f"{name} JSON: {exc.message}") from None
