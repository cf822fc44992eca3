"""Gazetteer loading, alternate-name indexing, and great-circle distance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError
from .preprocess import PreprocessOptions, normalize_core

EARTH_RADIUS_KM = 6371.0


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in kilometers on a spherical Earth."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlam / 2) ** 2
    return EARTH_RADIUS_KM * 2.0 * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True)
class GazetteerEntry:
    """One geographic entity: id, coordinates, and its alternate names."""

    location_id: str
    primary_name: str
    lat: float
    lon: float
    altnames: frozenset[str]

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of range")
        if not self.altnames:
            raise ValueError("entry must carry at least one altname")


@dataclass
class Gazetteer:
    """Immutable-after-load entry table plus an alternate-name index.

    The index maps each normalized altname to the sorted tuple of ids of
    the entities that bear it; a lowercased view supports case-insensitive
    exact lookup.
    """

    entries: dict[str, GazetteerEntry]
    options: PreprocessOptions
    alt_index: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    _lower_ids: dict[str, tuple[str, ...]] = field(init=False, repr=False)
    _lower_names: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        index: dict[str, set[str]] = {}
        for entry in self.entries.values():
            for name in entry.altnames:
                norm = normalize_core(name, self.options)
                if not norm:
                    continue
                index.setdefault(norm, set()).add(entry.location_id)
        self.alt_index = {k: tuple(sorted(v)) for k, v in index.items()}
        ids: dict[str, set[str]] = {}
        names: dict[str, set[str]] = {}
        for k, v in self.alt_index.items():
            ids.setdefault(k.lower(), set()).update(v)
            names.setdefault(k.lower(), set()).add(k)
        self._lower_ids = {k: tuple(sorted(v)) for k, v in ids.items()}
        self._lower_names = {k: tuple(sorted(v)) for k, v in names.items()}

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def num_altnames(self) -> int:
        return len(self.alt_index)

    def unique_altnames(self) -> list[str]:
        """All normalized altnames, sorted for reproducible downstream order."""
        return sorted(self.alt_index)

    def ids_for(self, altname: str) -> tuple[str, ...]:
        """Ids of entities bearing this altname (normalized before lookup)."""
        return self.alt_index.get(normalize_core(altname, self.options), ())

    def ids_for_caseless(self, altname: str) -> tuple[str, ...]:
        """Case-insensitive variant of ids_for."""
        return self._lower_ids.get(normalize_core(altname, self.options).lower(), ())

    def altnames_caseless(self, query: str) -> tuple[str, ...]:
        """Stored altname keys that equal the query up to letter case."""
        return self._lower_names.get(normalize_core(query, self.options).lower(), ())


def _parse_row(line: str, lineno: int) -> tuple[str, str, float, float, str]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 5:
        raise InputError(f"line {lineno}: expected 5 tab-separated fields, got {len(parts)}")
    loc_id, primary, lat_s, lon_s, altname = parts
    if not loc_id:
        raise InputError(f"line {lineno}: empty location id")
    try:
        lat, lon = float(lat_s), float(lon_s)
    except ValueError:
        raise InputError(f"line {lineno}: coordinates are not numbers") from None
    if not -90.0 <= lat <= 90.0:
        raise InputError(f"line {lineno}: latitude {lat} out of range [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise InputError(f"line {lineno}: longitude {lon} out of range [-180, 180]")
    return loc_id, primary, lat, lon, altname


def load_gazetteer(path: str | Path, options: PreprocessOptions | None = None) -> Gazetteer:
    """Load a gazetteer TSV: location_id, primary_name, lat, lon, altname.

    One row per (id, altname); duplicate rows collapse. The first row of an
    id fixes its primary name and coordinates.
    """
    options = options or PreprocessOptions()
    path = Path(path)
    if not path.is_file():
        raise InputError(f"gazetteer file not found: {path}")
    first: dict[str, tuple[str, float, float]] = {}
    names: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            loc_id, primary, lat, lon, altname = _parse_row(line, lineno)
            if loc_id not in first:
                first[loc_id] = (primary, lat, lon)
                names[loc_id] = {primary} if primary else set()
            if altname:
                names[loc_id].add(altname)
    entries = {}
    for loc_id, (primary, lat, lon) in first.items():
        if not names[loc_id]:
            raise InputError(f"location {loc_id} has no names at all")
        entries[loc_id] = GazetteerEntry(
            location_id=loc_id,
            primary_name=primary,
            lat=lat,
            lon=lon,
            altnames=frozenset(names[loc_id]),
        )
    return Gazetteer(entries=entries, options=options)


def merge_gazetteers(gazetteers: list[Gazetteer]) -> Gazetteer:
    """Union of several gazetteers.

    Id collisions union the altnames and keep the first coordinates seen.
    """
    if not gazetteers:
        raise InputError("nothing to merge")
    options = gazetteers[0].options
    merged: dict[str, GazetteerEntry] = {}
    for gz in gazetteers:
        for loc_id, entry in gz.entries.items():
            if loc_id in merged:
                old = merged[loc_id]
                merged[loc_id] = GazetteerEntry(
                    location_id=loc_id,
                    primary_name=old.primary_name,
                    lat=old.lat,
                    lon=old.lon,
                    altnames=old.altnames | entry.altnames,
                )
            else:
                merged[loc_id] = entry
    return Gazetteer(entries=merged, options=options)
