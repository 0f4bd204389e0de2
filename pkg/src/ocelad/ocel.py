"""Object-centric event log model plus a strict OCEL JSON reader/writer.

The in-memory model is a validated, immutable snapshot of an object-centric
event log: events carry an activity, a millisecond UTC timestamp, a non-empty
set of object references and a map of typed attribute values. The reader
accepts the OCEL 1.0 JSON interchange format (``ocel:global-log``,
``ocel:events``, ``ocel:objects``) and either returns a valid log or raises a
typed error; it never hands back a partially constructed log.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Mapping

logger = logging.getLogger(__name__)

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# Top-level keys of the OCEL 1.0 JSON format. Keys outside this set are
# ignored with a warning; "ocel:global-event"/"ocel:global-object" carry
# defaults we do not model and are skipped silently.
_KNOWN_TOP_KEYS = {
    "ocel:global-log",
    "ocel:events",
    "ocel:objects",
    "ocel:global-event",
    "ocel:global-object",
    "ocel:version",
    "ocel:ordering",
}


class OcelError(Exception):
    """Base class for log parsing and validation failures."""


class MalformedDocumentError(OcelError):
    """Input is not a well-formed OCEL JSON document."""


class MissingFieldError(OcelError):
    """A required event or object field is absent or empty."""


class InvalidTimestampError(OcelError):
    """A timestamp value cannot be read as ISO-8601."""


class DanglingObjectRefError(OcelError):
    """An event references an object that is not declared in the log."""


class InconsistentAttributeKindError(OcelError):
    """The same attribute is numeric in one event and categorical in another."""


class UnsupportedAttributeValueError(OcelError):
    """An attribute value is neither a number nor text."""


class AttributeKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Event:
    """A single event: activity, timestamp, object references, attributes.

    ``timestamp`` is milliseconds since the Unix epoch, UTC. ``attributes``
    maps attribute names to ``float`` (numeric) or ``str`` (categorical)
    values; numeric values are always finite.
    """

    event_id: str
    activity: str
    timestamp: int
    object_refs: frozenset[str]
    attributes: Mapping[str, float | str] = field(default_factory=dict)


@dataclass(frozen=True)
class ObjectEntry:
    object_id: str
    object_type: str


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding, with a stable code and the offending id."""

    code: str
    message: str


@dataclass(frozen=True)
class ObjectCentricLog:
    """A validated object-centric event log.

    Immutable after construction; safe to share across threads for reading.
    """

    events: tuple[Event, ...]
    objects: tuple[ObjectEntry, ...]
    object_types: frozenset[str]
    activities: frozenset[str]
    schema: Mapping[str, AttributeKind]

    def event_ids(self) -> tuple[str, ...]:
        return tuple(e.event_id for e in self.events)


def parse_timestamp(text: str) -> int:
    """Parse an ISO-8601 timestamp into milliseconds since the epoch (UTC).

    Values without a timezone are taken as UTC; a trailing ``Z`` is accepted.
    Sub-millisecond precision is truncated.
    """
    normalized = text.strip()
    if normalized.endswith(("Z", "z")):
        normalized = normalized[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError as exc:
        raise InvalidTimestampError(f"not an ISO-8601 timestamp: {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - _EPOCH
    return delta.days * 86_400_000 + delta.seconds * 1000 + delta.microseconds // 1000


def format_timestamp(millis: int) -> str:
    """Render milliseconds since the epoch as ISO-8601 UTC with millisecond precision."""
    dt = _EPOCH + timedelta(milliseconds=int(millis))
    return dt.isoformat(timespec="milliseconds")


def _coerce_attribute_value(event_id: str, name: str, raw: object) -> float | str | None:
    """Map a JSON attribute value onto the model's value space.

    Numbers become floats, strings stay strings, booleans become the
    categorical strings "true"/"false", nulls mean "attribute absent".
    """
    if raw is None:
        return None
    if isinstance(raw, bool):
        return "true" if raw else "false"
    if isinstance(raw, (int, float)):
        value = float(raw)
        if not math.isfinite(value):
            raise UnsupportedAttributeValueError(
                f"event {event_id!r}: attribute {name!r} is not finite"
            )
        return value
    if isinstance(raw, str):
        return raw
    raise UnsupportedAttributeValueError(
        f"event {event_id!r}: attribute {name!r} has unsupported type {type(raw).__name__}"
    )


def _infer_schema(
    events: tuple[Event, ...], declared_names: list[str]
) -> dict[str, AttributeKind]:
    """Derive attribute kinds from observed values.

    An attribute is numeric iff every occurrence is a number; an attribute
    with only text occurrences is categorical; a mix of the two is an error.
    Declared but never-observed attributes default to categorical.
    """
    kinds: dict[str, AttributeKind] = {}
    for event in events:
        for name, value in event.attributes.items():
            kind = (
                AttributeKind.NUMERIC
                if isinstance(value, float)
                else AttributeKind.CATEGORICAL
            )
            previous = kinds.get(name)
            if previous is None:
                kinds[name] = kind
            elif previous is not kind:
                raise InconsistentAttributeKindError(
                    f"attribute {name!r} is {previous.value} in one event and "
                    f"{kind.value} in another (event {event.event_id!r})"
                )
    for name in declared_names:
        kinds.setdefault(name, AttributeKind.CATEGORICAL)
    return {name: kinds[name] for name in sorted(kinds)}


def _coerce_event_values(event: Event) -> Event:
    """Normalize integer attribute values to floats (the model's value space)."""
    if not any(
        isinstance(v, int) and not isinstance(v, bool) for v in event.attributes.values()
    ):
        return event
    coerced = {
        name: float(value)
        if isinstance(value, int) and not isinstance(value, bool)
        else value
        for name, value in event.attributes.items()
    }
    return Event(
        event_id=event.event_id,
        activity=event.activity,
        timestamp=event.timestamp,
        object_refs=event.object_refs,
        attributes=coerced,
    )


def assemble_log(
    events: list[Event] | tuple[Event, ...],
    objects: list[ObjectEntry] | tuple[ObjectEntry, ...],
) -> ObjectCentricLog:
    """Build a log from parts, deriving type/activity sets and the schema.

    Raises the same typed errors as the parser when the parts are inconsistent.
    """
    events = tuple(_coerce_event_values(e) for e in events)
    objects = tuple(objects)
    known_objects = {o.object_id for o in objects}
    for event in events:
        if not event.object_refs:
            raise MissingFieldError(f"event {event.event_id!r}: empty object references")
        missing = event.object_refs - known_objects
        if missing:
            raise DanglingObjectRefError(
                f"event {event.event_id!r} references undeclared object(s) "
                f"{sorted(missing)}"
            )
    schema = _infer_schema(events, [])
    return ObjectCentricLog(
        events=events,
        objects=objects,
        object_types=frozenset(o.object_type for o in objects),
        activities=frozenset(e.activity for e in events),
        schema=schema,
    )


def parse_ocel_json(data: bytes | str) -> ObjectCentricLog:
    """Parse an OCEL 1.0 JSON document into a validated log.

    Events retain file order. The attribute schema is inferred from the
    global attribute declarations and the observed values. Every failure is
    one of the typed ``OcelError`` subclasses.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocumentError("input is not UTF-8 text") from exc
    else:
        text = data

    def _reject_constant(token: str) -> float:
        raise MalformedDocumentError(f"non-finite number {token!r} is not valid JSON")

    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocumentError("top level must be a JSON object")

    for key in doc:
        if key not in _KNOWN_TOP_KEYS:
            logger.warning("ignoring unknown top-level key %r", key)

    global_log = doc.get("ocel:global-log", {})
    if not isinstance(global_log, dict):
        raise MalformedDocumentError("'ocel:global-log' must be an object")
    declared_types = global_log.get("ocel:object-types", [])
    declared_attrs = global_log.get("ocel:attribute-names", [])
    if not isinstance(declared_types, list) or not all(
        isinstance(t, str) for t in declared_types
    ):
        raise MalformedDocumentError("'ocel:object-types' must be a list of strings")
    if not isinstance(declared_attrs, list) or not all(
        isinstance(a, str) for a in declared_attrs
    ):
        raise MalformedDocumentError("'ocel:attribute-names' must be a list of strings")

    objects_raw = doc.get("ocel:objects", {})
    if not isinstance(objects_raw, dict):
        raise MalformedDocumentError("'ocel:objects' must be an object")
    objects: list[ObjectEntry] = []
    for object_id, body in objects_raw.items():
        if not isinstance(body, dict):
            raise MalformedDocumentError(f"object {object_id!r} must be an object")
        object_type = body.get("ocel:type")
        if not isinstance(object_type, str) or not object_type:
            raise MissingFieldError(f"object {object_id!r}: missing ocel:type")
        if declared_types and object_type not in declared_types:
            logger.warning(
                "object %r has undeclared type %r", object_id, object_type
            )
        objects.append(ObjectEntry(object_id=object_id, object_type=object_type))
    known_objects = {o.object_id for o in objects}

    events_raw = doc.get("ocel:events", {})
    if not isinstance(events_raw, dict):
        raise MalformedDocumentError("'ocel:events' must be an object")
    events: list[Event] = []
    for event_id, body in events_raw.items():
        if not isinstance(body, dict):
            raise MalformedDocumentError(f"event {event_id!r} must be an object")
        activity = body.get("ocel:activity")
        if not isinstance(activity, str) or not activity:
            raise MissingFieldError(f"event {event_id!r}: missing ocel:activity")
        ts_raw = body.get("ocel:timestamp")
        if not isinstance(ts_raw, str):
            raise MissingFieldError(f"event {event_id!r}: missing ocel:timestamp")
        timestamp = parse_timestamp(ts_raw)
        omap = body.get("ocel:omap")
        if not isinstance(omap, list):
            raise MissingFieldError(f"event {event_id!r}: missing ocel:omap")
        if not omap:
            # An event tied to no object cannot be placed in any trace.
            raise MissingFieldError(f"event {event_id!r}: empty ocel:omap")
        refs = frozenset(str(ref) for ref in omap)
        dangling = refs - known_objects
        if dangling:
            raise DanglingObjectRefError(
                f"event {event_id!r} references undeclared object(s) {sorted(dangling)}"
            )
        vmap = body.get("ocel:vmap", {})
        if not isinstance(vmap, dict):
            raise MalformedDocumentError(f"event {event_id!r}: ocel:vmap must be an object")
        attributes: dict[str, float | str] = {}
        for name, raw in vmap.items():
            if name not in declared_attrs:
                logger.warning("event %r uses undeclared attribute %r", event_id, name)
            value = _coerce_attribute_value(event_id, name, raw)
            if value is not None:
                attributes[name] = value
        events.append(
            Event(
                event_id=event_id,
                activity=activity,
                timestamp=timestamp,
                object_refs=refs,
                attributes=attributes,
            )
        )

    schema = _infer_schema(tuple(events), declared_attrs)
    observed_types = frozenset(o.object_type for o in objects)
    return ObjectCentricLog(
        events=tuple(events),
        objects=tuple(objects),
        object_types=frozenset(declared_types) | observed_types,
        activities=frozenset(e.activity for e in events),
        schema=schema,
    )


def write_ocel_json(log: ObjectCentricLog) -> bytes:
    """Serialize a log as OCEL 1.0 JSON. Deterministic: equal logs → equal bytes."""
    doc = {
        "ocel:global-log": {
            "ocel:object-types": sorted(log.object_types),
            "ocel:attribute-names": sorted(log.schema),
        },
        "ocel:events": {
            e.event_id: {
                "ocel:activity": e.activity,
                "ocel:timestamp": format_timestamp(e.timestamp),
                "ocel:omap": sorted(e.object_refs),
                "ocel:vmap": {name: e.attributes[name] for name in sorted(e.attributes)},
            }
            for e in log.events
        },
        "ocel:objects": {
            o.object_id: {"ocel:type": o.object_type, "ocel:ovmap": {}}
            for o in log.objects
        },
    }
    return json.dumps(doc, indent=2, ensure_ascii=False).encode("utf-8")


def validate_log(log: ObjectCentricLog) -> list[Diagnostic]:
    """Check every log invariant; returns one diagnostic per violation.

    An empty result means the log is valid. Never raises.
    """
    diagnostics: list[Diagnostic] = []
    seen_events: set[str] = set()
    seen_objects: set[str] = set()
    object_ids = {o.object_id for o in log.objects}

    for entry in log.objects:
        if entry.object_id in seen_objects:
            diagnostics.append(
                Diagnostic("DuplicateObjectId", f"object {entry.object_id!r} declared twice")
            )
        seen_objects.add(entry.object_id)
        if entry.object_type not in log.object_types:
            diagnostics.append(
                Diagnostic(
                    "UnknownObjectType",
                    f"object {entry.object_id!r} has undeclared type {entry.object_type!r}",
                )
            )

    kinds_seen: dict[str, AttributeKind] = {}
    for event in log.events:
        if event.event_id in seen_events:
            diagnostics.append(
                Diagnostic("DuplicateEventId", f"event {event.event_id!r} appears twice")
            )
        seen_events.add(event.event_id)
        if event.activity not in log.activities:
            diagnostics.append(
                Diagnostic(
                    "UnknownActivity",
                    f"event {event.event_id!r} has undeclared activity {event.activity!r}",
                )
            )
        if not event.object_refs:
            diagnostics.append(
                Diagnostic("EmptyObjectRefs", f"event {event.event_id!r} references no objects")
            )
        for ref in sorted(event.object_refs - object_ids):
            diagnostics.append(
                Diagnostic(
                    "DanglingObjectRef",
                    f"event {event.event_id!r} references undeclared object {ref!r}",
                )
            )
        for name in sorted(event.attributes):
            value = event.attributes[name]
            kind = (
                AttributeKind.NUMERIC
                if isinstance(value, float)
                else AttributeKind.CATEGORICAL
            )
            declared = log.schema.get(name)
            if declared is None:
                diagnostics.append(
                    Diagnostic(
                        "UnknownAttribute",
                        f"event {event.event_id!r} uses attribute {name!r} not in schema",
                    )
                )
            elif declared is not kind:
                diagnostics.append(
                    Diagnostic(
                        "InconsistentAttributeKind",
                        f"event {event.event_id!r}: attribute {name!r} is {kind.value}, "
                        f"schema says {declared.value}",
                    )
                )
            previous = kinds_seen.get(name)
            if previous is not None and previous is not kind and declared is kind:
                # Mixed observations that happen to straddle the schema kind.
                diagnostics.append(
                    Diagnostic(
                        "InconsistentAttributeKind",
                        f"attribute {name!r} observed as both numeric and categorical "
                        f"(event {event.event_id!r})",
                    )
                )
            kinds_seen.setdefault(name, kind)
            if isinstance(value, float) and not math.isfinite(value):
                diagnostics.append(
                    Diagnostic(
                        "NonFiniteNumeric",
                        f"event {event.event_id!r}: attribute {name!r} is not finite",
                    )
                )

    return diagnostics
