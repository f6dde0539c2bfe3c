"""Reading and writing the JSON file formats; the kind of a file is told by its keys."""
import json
import logging

import numpy as np

from trace_lab.channels import TransferChannel
from trace_lab.errors import SchemaError
from trace_lab.freegroup import UnitaryTuple
from trace_lab.linalg import cmatrix_from_dict, cmatrix_to_dict
from trace_lab.matprod import MnMnRep
from trace_lab.obstructions import CharacterTable

logger = logging.getLogger(__name__)

# checked in order; the first kind whose keys are all present wins
KINDS = (
    ("mnmn", {"n", "k", "e", "f"}),
    ("channel", {"n", "values"}),
    ("unitaries", {"d", "k", "unitaries"}),
    ("table", {"class_sizes", "characters"}),
    ("cmatrix", {"dim", "data"}),
)

_READERS = {
    "mnmn": MnMnRep.from_dict,
    "channel": TransferChannel.from_dict,
    "unitaries": UnitaryTuple.from_dict,
    "table": CharacterTable.from_dict,
    "cmatrix": cmatrix_from_dict,
}


def detect_kind(obj):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected a JSON object, got {type(obj).__name__}")
    for kind, keys in KINDS:
        if keys <= obj.keys():
            return kind
    raise SchemaError(f"unknown schema with keys {sorted(obj)}")


def loads(text):
    """
    Parses a JSON document into the object it describes.

    Args:
        text (str): File contents.

    Returns:
        tuple: (kind, object).
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from e
    kind = detect_kind(obj)
    try:
        return kind, _READERS[kind](obj)
    except (KeyError, ValueError, TypeError, IndexError) as e:
        raise SchemaError(f"malformed {kind} file: {e}") from e


def load_any(path):
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except UnicodeDecodeError as e:
        raise SchemaError(f"{path} is not UTF-8 text: {e}") from e
    kind, value = loads(text)
    logger.debug(f"{path}: {kind}")
    return kind, value


def to_payload(value):
    if isinstance(value, np.ndarray):
        return cmatrix_to_dict(value)
    return value.to_dict()


def dumps(value):
    return json.dumps(to_payload(value), sort_keys=True, indent=2) + "\n"


def roundtrip(path):
    """
    Parses a file, serializes it, parses and serializes again.

    Args:
        path (str): Any supported file.

    Returns:
        bool: Whether both serializations are identical.
    """
    _, value = load_any(path)
    first = dumps(value)
    _, again = loads(first)
    second = dumps(again)
    return first == second
