"""
Families to and from plain structured data (dicts of lists and numbers),
which is what ends up in JSON configs.

Two forms exist:

- Named: `{"kind": "laguerre", "s": 8, "nu": 0.8, "ts": 0.02}`, rebuilt by
  calling the constructor again.
- Raw: `{"kind": "raw", "M": [[...]], "tau0": [...]}`. Floats are stored
  as-is, so the round-trip is exact.

Any of them can carry `"orthonormalize": true`.
"""
from typing import Any, Dict, Text

import numpy as np

from .constructors import (
    block_union,
    make_classic,
    make_damped_fourier,
    make_laguerre,
    make_lqr_family,
    shift_family_cascade,
)
from .family import BasisError, BasisFamily, orthonormalize

FamilyConfig = Dict[Text, Any]


def _require(config: FamilyConfig, *keys: Text) -> None:
    missing = [k for k in keys if config.get(k) is None]

    if missing:
        raise BasisError(
            f"Family of kind {config.get('kind')!r} is missing {', '.join(missing)}"
        )


def family_from_config(config: FamilyConfig) -> BasisFamily:
    """
    Build a family out of its structured description.

    :param config: dict with a `kind` key and the parameters of that kind
    """

    kind = config.get("kind")

    if kind == "classic":
        _require(config, "s")
        family = make_classic(config["s"])
    elif kind == "laguerre":
        _require(config, "s", "nu", "ts")
        family = make_laguerre(config["s"], config["nu"], config["ts"])
    elif kind == "damped_fourier":
        _require(config, "s", "nu", "omega", "ts")
        family = make_damped_fourier(
            config["s"], config["nu"], config["omega"], config["ts"]
        )
    elif kind == "lqr":
        _require(config, "A", "B", "K")
        family = make_lqr_family(
            config["A"], config["B"], config["K"], config.get("tau0")
        )
    elif kind == "union":
        _require(config, "members")
        family = block_union([family_from_config(m) for m in config["members"]])
    elif kind == "cascade":
        _require(config, "members")

        if len(config["members"]) != 2:
            raise BasisError("A cascade is made of exactly two families")

        first, second = [family_from_config(m) for m in config["members"]]
        family = shift_family_cascade(first, second)
    elif kind == "raw":
        _require(config, "M", "tau0")
        family = BasisFamily(
            M=np.array(config["M"], dtype=float),
            tau0=np.array(config["tau0"], dtype=float),
        )
    else:
        raise BasisError(f"Unknown family kind {kind!r}")

    if config.get("orthonormalize"):
        family = orthonormalize(family)

    return family


def family_to_config(family: BasisFamily, raw: bool = False) -> FamilyConfig:
    """
    Describe a family as structured data. Named kinds are written by name
    unless `raw` is set, in which case M and tau0 are dumped verbatim.
    """

    params = dict(family.params)
    orthonormal = params.pop("orthonormal", False)

    if raw or family.kind == "raw":
        return {
            "kind": "raw",
            "M": family.M.tolist(),
            "tau0": family.tau0.tolist(),
        }

    if family.kind in ("union", "cascade"):
        params["members"] = [family_to_config(m) for m in params["members"]]

    out = {"kind": family.kind}
    out.update(params)

    if orthonormal:
        out["orthonormalize"] = True

    return out
