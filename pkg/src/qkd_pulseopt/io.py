"""JSON persistence of tap vectors.

File layout: ``{"label": str, "sps": int, "roll_off": number | null, "taps": [numbers]}``.
Floats go through ``repr`` (shortest round-trip), so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import json
import math

from .pulse_shaping import TapVector

TAP_KEYS = ("label", "sps", "roll_off", "taps")


class TapFileError(ValueError):
    pass


def taps_to_json(taps: TapVector) -> str:
    doc = {
        "label": taps.label,
        "sps": taps.sps,
        "roll_off": taps.roll_off,
        "taps": [float(v) for v in taps.taps],
    }
    return json.dumps(doc, indent=2) + "\n"


def taps_from_json(text: str, source: str = "<string>") -> TapVector:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TapFileError(
            f"{source}: invalid JSON at offset {exc.pos} (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise TapFileError(f"{source}: expected a JSON object")
    unknown = sorted(set(doc) - set(TAP_KEYS))
    if unknown:
        raise TapFileError(f"{source}: unknown key(s) {', '.join(unknown)}")
    missing = [k for k in ("sps", "taps") if k not in doc]
    if missing:
        raise TapFileError(f"{source}: missing key(s) {', '.join(missing)}")
    label = doc.get("label", "")
    sps = doc["sps"]
    roll_off = doc.get("roll_off")
    taps = doc["taps"]
    if not isinstance(label, str):
        raise TapFileError(f"{source}: label must be a string")
    if not isinstance(sps, int) or isinstance(sps, bool):
        raise TapFileError(f"{source}: sps must be an integer")
    if roll_off is not None and (
        not isinstance(roll_off, (int, float)) or isinstance(roll_off, bool)
    ):
        raise TapFileError(f"{source}: roll_off must be a number or null")
    if not isinstance(taps, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in taps
    ):
        raise TapFileError(f"{source}: taps must be a list of finite numbers")
    try:
        return TapVector(
            [float(v) for v in taps], sps, label, None if roll_off is None else float(roll_off)
        )
    except ValueError as exc:
        raise TapFileError(f"{source}: {exc}") from None


def write_taps(taps: TapVector, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(taps_to_json(taps))


def read_taps(path) -> TapVector:
    with open(path, encoding="utf-8") as fh:
        return taps_from_json(fh.read(), str(path))


def roundtrip_taps(taps: TapVector) -> TapVector:
    return taps_from_json(taps_to_json(taps))
