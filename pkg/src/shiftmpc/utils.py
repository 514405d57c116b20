from hashlib import sha256
from typing import Any, Text

import numpy as np


def array_hash(*arrays: np.ndarray) -> Text:
    """
    Hash the exact content (shape, dtype and bytes) of a few arrays. Used to
    identify a basis family inside certificates.
    """

    h = sha256()

    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(repr(a.shape).encode())
        h.update(a.tobytes())

    return h.hexdigest()


def frozen(a: Any) -> np.ndarray:
    """
    Return a read-only float copy of an array-like, so objects holding it
    can be shared without anyone changing them behind our back.
    """

    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def to_jsonable(obj: Any) -> Any:
    """
    Convert numpy containers and scalars nested into dicts/lists into plain
    Python types that ujson is able to dump. Infinite values become strings
    ("inf", "-inf") since JSON has no representation for them.
    """

    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    elif isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    elif isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    elif isinstance(obj, (np.integer,)):
        return int(obj)
    elif isinstance(obj, (np.floating, float)):
        v = float(obj)

        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        elif np.isnan(v):
            return "nan"

        return v
    else:
        return obj
