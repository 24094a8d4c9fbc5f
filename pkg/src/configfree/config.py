"""JSON system descriptors.

A descriptor looks like::

    {"ambient": "Z_7", "degree": 3, "source": {"kernel": {"matrix": [[1, -2, 1]]}}}

``ambient`` is a group descriptor or ``{"box": {"n": N, "m": M}}``.  The
source is one of ``kernel``, ``family`` or ``explicit``.  A bare
``{"family": name, "params": {...}}`` is accepted as shorthand.  Errors carry a
JSON pointer to the offending field.
"""

import json

from .errors import ConfigError
from .groups import Box, Group, group_from_descriptor
from .system import DEFAULT_BUDGET, ConfigSystem


def _prefix(exc, base):
    ptr = base + (exc.pointer or "")
    msg = str(exc)
    if exc.pointer is not None:
        msg = msg[: msg.rfind(" (at ")]
    return ConfigError(msg, pointer=ptr)


def parse_json(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {source}: {exc.msg} at line {exc.lineno} "
                          f"column {exc.colno}", pointer="") from None


def load_json_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_json(text, path)


def ambient_from_descriptor(desc):
    if isinstance(desc, dict) and "box" in desc:
        box = desc["box"]
        if not isinstance(box, dict) or "n" not in box:
            raise ConfigError("box needs n", pointer="/box/n")
        try:
            return Box(int(box["n"]), int(box.get("m", 1)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), pointer="/box") from None
    try:
        return group_from_descriptor(desc)
    except ConfigError as exc:
        raise _prefix(exc, "") from None


def _label(v):
    return tuple(v) if isinstance(v, list) else v


def system_from_descriptor(desc, budget=DEFAULT_BUDGET):
    """Build ``(system, family_instance_or_None)`` from a parsed descriptor."""
    if not isinstance(desc, dict):
        raise ConfigError("system descriptor must be a JSON object", pointer="")
    if "family" in desc and "source" not in desc:
        desc = {"source": {"family": desc["family"], "params": desc.get("params", {})}}
        base = ""
    else:
        base = "/source"
    src = desc.get("source")
    if not isinstance(src, dict):
        raise ConfigError("missing or malformed source", pointer="/source")
    if "family" in src:
        from .families import build_family

        try:
            inst = build_family(src["family"], src.get("params", {}), budget)
        except ConfigError as exc:
            raise _prefix(exc, base) from None
        if "degree" in desc and int(desc["degree"]) != inst.system.k:
            raise ConfigError(f"family has degree {inst.system.k}", pointer="/degree")
        return inst.system, inst

    if "ambient" not in desc:
        raise ConfigError("missing ambient", pointer="/ambient")
    try:
        ambient = ambient_from_descriptor(desc["ambient"])
    except ConfigError as exc:
        raise _prefix(exc, "/ambient") from None
    if "degree" not in desc:
        raise ConfigError("missing degree", pointer="/degree")
    k = desc["degree"]
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ConfigError("degree must be a positive integer", pointer="/degree")

    if "kernel" in src:
        ker = src["kernel"]
        if not isinstance(ker, dict) or "matrix" not in ker:
            raise ConfigError("kernel needs a matrix", pointer="/source/kernel/matrix")
        mat = ker["matrix"]
        if not (isinstance(mat, list) and mat and all(
                isinstance(r, list) and all(isinstance(v, int) for v in r) for r in mat)):
            raise ConfigError("matrix must be a nonempty list of integer rows",
                              pointer="/source/kernel/matrix")
        if not isinstance(ambient, Group):
            raise ConfigError("kernel systems need a group ambient", pointer="/ambient")
        from .groups import BlockHom

        try:
            M = BlockHom(mat, m=int(ker.get("m", 1)))
        except ConfigError as exc:
            raise _prefix(exc, "/source/kernel/matrix") from None
        b = ker.get("b")
        if b is not None:
            b = [_label(v) for v in b]
        try:
            return ConfigSystem.from_kernel(ambient, k, M, b, budget=budget), None
        except ConfigError as exc:
            raise _prefix(exc, "/source/kernel") from None

    if "explicit" in src:
        rows = src["explicit"]
        if not isinstance(rows, list):
            raise ConfigError("explicit must be a list of tuples", pointer="/source/explicit")
        tuples = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != k:
                raise ConfigError(f"tuple must have {k} entries", pointer=f"/source/explicit/{i}")
            tuples.append([_label(v) for v in row])
        try:
            return ConfigSystem.explicit(ambient, k, tuples), None
        except ConfigError as exc:
            raise _prefix(exc, "/source/explicit") from None
    raise ConfigError("source must be kernel, family or explicit", pointer="/source")
