"""Built-in registry of extreme-weather events (name, type, country, date)
plus JSON loading for deployment-specific registries.
"""

from __future__ import annotations

import json
from datetime import date, datetime
from pathlib import Path
from typing import Optional, Sequence

from .core import Event, EventType, EwraError


class EventRegistryError(EwraError):
    """Raised on malformed event-registry files."""


# (name, event_type, country, event_date)
_DEFAULT_ROWS: tuple[tuple[str, str, str, str], ...] = (
    ("Romania Floods", "floods", "Romania", "2024-08-31"),
    ("Poland Floods", "floods", "Poland", "2024-08-18"),
    ("USA Winter Storm", "cold", "USA", "2024-01-14"),
    ("Scandinavian Cold Spell", "cold", "Norway", "2024-01-08"),
    ("Ciro Snowstorm", "cold", "Germany", "2023-12-02"),
    ("North American Winter Storm", "cold", "Canada", "2022-12-27"),
    ("Hurricane Helene", "wind", "USA", "2024-09-27"),
    ("Typhoon Yagi", "wind", "Vietnam", "2024-09-08"),
    ("Storm Ingunn", "wind", "Norway", "2024-02-01"),
    ("Cyclone Belal", "wind", "France", "2024-01-15"),
    ("Cyclone Jasper", "wind", "Australia", "2023-12-18"),
    ("Storm Ciaran", "wind", "France", "2023-11-03"),
    ("Cyclone Tej", "wind", "Yemen", "2023-10-23"),
    ("Storms Babet and Aline", "wind", "Scotland", "2023-10-20"),
    ("Storm Poly", "wind", "Denmark", "2023-07-05"),
    ("Hurricane Ian Landfall", "wind", "USA", "2022-09-28"),
    ("April 2020 USA Tornado Outbreak", "wind", "USA", "2020-04-12"),
    ("Hurricane Irma Caribbean Landfall", "wind", "Caribbean", "2017-09-07"),
    ("European Heatwave", "heatwave", "Albania", "2024-07-19"),
    ("Eastern United States Heatwave", "heatwave", "USA", "2024-06-23"),
    ("Saudi Arabia Heatwave", "heatwave", "Saudi Arabia", "2024-06-18"),
    ("Eastern Mediterranean Heatwave", "heatwave", "Cyprus", "2024-06-14"),
    ("India Heatwave", "heatwave", "India", "2024-05-29"),
    ("Easter Extreme Weather in Europe", "heatwave", "Italy", "2024-04-01"),
    ("Morocco Heatwave", "heatwave", "Morocco", "2024-02-15"),
    ("Central Asia Heatwave", "heatwave", "Pakistan", "2023-11-30"),
    ("Brazil Heatwave", "heatwave", "Brazil", "2023-11-19"),
    ("October Heatwave in Europe", "heatwave", "Switzerland", "2023-10-13"),
    (
        "September Heatwave in Southern and Central Europe",
        "heatwave",
        "France",
        "2023-09-10",
    ),
    ("Late Summer French Heatwave", "heatwave", "France", "2023-08-23"),
    ("Western USA Heatwave", "heatwave", "USA", "2023-07-31"),
    ("Cerberus Heatwave in Southern Europe", "heatwave", "Italy", "2023-07-25"),
    ("Southeast Asia Heat Peak", "heatwave", "Thailand", "2023-04-15"),
    ("Italy Multiple Floods", "rain", "Italy", "2024-10-19"),
    ("Storm Kirk", "rain", "France", "2024-10-09"),
    ("Storm Boris", "rain", "Austria", "2024-09-15"),
    ("Hurricane Beryl", "rain", "Jamaica", "2024-07-03"),
    ("Genoa Low Summer Floods", "rain", "France", "2024-06-24"),
    ("Bavaria Floods", "rain", "Germany", "2024-06-03"),
    ("Texas Floods", "rain", "USA", "2024-05-05"),
    ("South Brazil Floods", "rain", "Brazil", "2024-05-02"),
    ("China Floods", "rain", "China", "2024-04-23"),
    ("Dubai Floods", "rain", "UAE", "2024-04-16"),
    ("Storm Monica", "rain", "France", "2024-03-09"),
    ("California Floods", "rain", "USA", "2024-02-01"),
    ("San Diego Floods", "rain", "USA", "2024-01-22"),
    (
        "North-West USA and Canada Atmospheric River",
        "rain",
        "USA",
        "2023-12-06",
    ),
    ("France and Italy Floods", "rain", "France", "2023-11-21"),
    ("Hurricane Otis", "rain", "Mexico", "2023-10-25"),
    ("New York Floods", "rain", "USA", "2023-09-29"),
    ("Mediterranean Depression Elias", "rain", "Greece", "2023-09-27"),
    ("Cape Town Floods", "rain", "South Africa", "2023-09-25"),
    ("Cevennes Floods", "rain", "France", "2023-09-17"),
    ("Medicane Daniel", "rain", "Lybia", "2023-09-11"),
    ("Guangdong and Hong Kong Floods", "rain", "Hong Kong", "2023-09-08"),
    ("Mediterranean Depression Daniel", "rain", "Greece", "2023-09-05"),
    ("Mediterranean Depression Rea", "rain", "Italy", "2023-08-29"),
    ("Storm Hans in Scandinavia", "rain", "Norway", "2023-08-08"),
    ("California Atmospheric River", "rain", "USA", "2023-01-10"),
    ("Medicane Ianos", "rain", "Greece", "2020-09-18"),
)


def _parse_event_date(raw: str, where: str) -> date:
    """Accept ISO (YYYY-MM-DD) or day-first DD/MM/YYYY; fall back to
    month-first when the day-first reading is impossible."""
    raw = raw.strip()
    try:
        return date.fromisoformat(raw)
    except ValueError:
        pass
    for fmt in ("%d/%m/%Y", "%m/%d/%Y"):
        try:
            return datetime.strptime(raw, fmt).date()
        except ValueError:
            continue
    raise EventRegistryError(f"{where}: cannot parse event_date {raw!r}")


def default_events() -> list[Event]:
    return [
        Event(
            name=name,
            event_type=EventType(kind),
            country=country,
            event_date=date.fromisoformat(when),
        )
        for name, kind, country, when in _DEFAULT_ROWS
    ]


def load_events(path: str | Path) -> list[Event]:
    """Load a JSON registry: a list of objects with name, event_type,
    country, event_date and optional proxy_query_name/admin_scope/id."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise EventRegistryError(f"{path}: cannot load registry ({exc})") from exc
    if not isinstance(data, list):
        raise EventRegistryError(f"{path}: registry must be a JSON list")
    events = []
    for i, row in enumerate(data):
        where = f"{path}[{i}]"
        try:
            event_type = EventType(str(row["event_type"]))
        except (KeyError, ValueError) as exc:
            raise EventRegistryError(f"{where}: bad or missing event_type") from exc
        try:
            events.append(
                Event(
                    name=str(row["name"]),
                    event_type=event_type,
                    country=str(row["country"]),
                    event_date=_parse_event_date(str(row["event_date"]), where),
                    proxy_query_name=str(row.get("proxy_query_name", "")),
                    admin_scope=tuple(row.get("admin_scope", ())),
                    id=str(row.get("id", "")),
                )
            )
        except KeyError as exc:
            raise EventRegistryError(f"{where}: missing field {exc}") from exc
    return events


def find_event(events: Sequence[Event], event_id: str) -> Optional[Event]:
    for event in events:
        if event.id == event_id:
            return event
    return None
