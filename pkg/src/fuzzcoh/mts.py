"""Core data model: time-series blocks, datasets, region maps, CSV ingestion.

A recording is a long multichannel matrix cut into fixed-length blocks.
Within a block the series is treated as stationary; every downstream
estimator works block by block.  Channels are split into an X group
(first ``p`` columns) and a Y group (next ``q`` columns).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, DataError

__all__ = [
    "MtsBlock",
    "MtsDataset",
    "RegionMap",
    "load_csv",
    "save_csv",
    "segment_rows",
    "select_regions",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MtsBlock:
    """One locally-stationary block: a T x (p+q) signal matrix.

    Attributes
    ----------
    data : ndarray, shape (T, p+q)
        Signal amplitudes; the first ``p`` columns are the X group.
    p, q : int
        Channel counts of the X and Y groups.
    sample_rate_hz : float
        Sampling rate in Hz.
    channel_names : tuple of str, optional
        Length p+q when present.
    label : int, optional
        Ground-truth class tag used by the evaluation protocol.
    """

    data: np.ndarray
    p: int
    q: int
    sample_rate_hz: float
    channel_names: Optional[tuple[str, ...]] = None
    label: Optional[int] = None

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise DataError(f"need p >= 1 and q >= 1, got p={self.p}, q={self.q}")
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"block data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 2:
            raise DataError(f"block needs at least 2 samples, got {data.shape[0]}")
        if data.shape[1] != self.p + self.q:
            raise DataError(
                f"block has {data.shape[1]} channels but p+q={self.p + self.q}"
            )
        if not np.isfinite(data).all():
            t, c = np.argwhere(~np.isfinite(data))[0]
            raise DataError(f"non-finite value at sample {t}, channel {c}")
        if self.sample_rate_hz <= 0:
            raise DataError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.channel_names is not None:
            names = tuple(self.channel_names)
            if len(names) != self.p + self.q:
                raise DataError(
                    f"channel_names has {len(names)} entries, expected {self.p + self.q}"
                )
            object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "data", _readonly(data))

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.p + self.q

    @property
    def x(self) -> np.ndarray:
        return self.data[:, : self.p]

    @property
    def y(self) -> np.ndarray:
        return self.data[:, self.p :]

    def with_data(self, data: np.ndarray) -> "MtsBlock":
        """Same metadata, new signal matrix of identical shape."""
        return MtsBlock(
            data=data,
            p=self.p,
            q=self.q,
            sample_rate_hz=self.sample_rate_hz,
            channel_names=self.channel_names,
            label=self.label,
        )


@dataclass(frozen=True)
class MtsDataset:
    """An ordered collection of blocks sharing channel layout and rate.

    ``band`` records which frequency band the data has been filtered to;
    ``None`` means raw (unfiltered) data.  With ``strict=True`` (default)
    all blocks must share the same length.
    """

    blocks: tuple[MtsBlock, ...]
    band: object = None  # Optional[BandSpec]; kept loose to avoid an import cycle
    strict: bool = True

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise DataError("dataset needs at least one block")
        first = blocks[0]
        for i, b in enumerate(blocks):
            if (b.p, b.q) != (first.p, first.q):
                raise DataError(f"block {i} has (p,q)=({b.p},{b.q}), expected ({first.p},{first.q})")
            if b.sample_rate_hz != first.sample_rate_hz:
                raise DataError(f"block {i} sample rate differs")
            if self.strict and b.n_samples != first.n_samples:
                raise DataError(
                    f"strict mode: block {i} has {b.n_samples} samples, expected {first.n_samples}"
                )
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def p(self) -> int:
        return self.blocks[0].p

    @property
    def q(self) -> int:
        return self.blocks[0].q

    @property
    def sample_rate_hz(self) -> float:
        return self.blocks[0].sample_rate_hz

    @property
    def channel_names(self) -> Optional[tuple[str, ...]]:
        return self.blocks[0].channel_names

    @property
    def labels(self) -> Optional[tuple[Optional[int], ...]]:
        labs = tuple(b.label for b in self.blocks)
        return None if all(v is None for v in labs) else labs

    def with_blocks(self, blocks: Sequence[MtsBlock], band=None) -> "MtsDataset":
        return MtsDataset(blocks=tuple(blocks), band=band, strict=self.strict)


@dataclass(frozen=True)
class RegionMap:
    """Named, disjoint channel groups plus optional region pairs.

    ``regions`` maps a region name to its channel names (order matters:
    it fixes the channel order of selections).  ``pairs`` optionally
    lists (X-region, Y-region) selections for pipeline runs.
    """

    regions: dict[str, tuple[str, ...]]
    pairs: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        regions = {str(k): tuple(v) for k, v in self.regions.items()}
        if not regions:
            raise ConfigError("region map has no regions")
        seen: dict[str, str] = {}
        for name, chans in regions.items():
            if not chans:
                raise ConfigError(f"region {name!r} is empty")
            for ch in chans:
                if ch in seen:
                    raise ConfigError(
                        f"channel {ch!r} appears in regions {seen[ch]!r} and {name!r}"
                    )
                seen[ch] = name
        pairs = tuple((str(a), str(b)) for a, b in self.pairs)
        for a, b in pairs:
            if a not in regions or b not in regions:
                raise ConfigError(f"pair ({a!r}, {b!r}) names an unknown region")
            if a == b:
                raise ConfigError(f"pair regions must differ, got ({a!r}, {a!r})")
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "pairs", pairs)


# ---------------------------------------------------------------------------
# ingestion / export
# ---------------------------------------------------------------------------

def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"non-numeric cell at row {row}, column {col}: {text!r}") from None
    if not np.isfinite(v):
        raise DataError(f"non-finite value at row {row}, column {col}: {text!r}")
    return v


def _read_table(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        n_cols = len(header)
        rows: list[list[float]] = []
        for r, line in enumerate(reader, start=1):
            if not line:
                continue
            if len(line) != n_cols:
                raise DataError(f"row {r}: expected {n_cols} cells, got {len(line)}")
            rows.append([_parse_cell(cell, r, c) for c, cell in enumerate(line)])
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def segment_rows(values: np.ndarray, block_length: int) -> list[np.ndarray]:
    """Cut a row matrix into floor(rows / block_length) full blocks.

    Trailing remainder rows are dropped with a warning.
    """
    if block_length < 2:
        raise ConfigError(f"block_length must be >= 2, got {block_length}")
    n = values.shape[0] // block_length
    if n == 0:
        raise DataError(
            f"only {values.shape[0]} rows, need at least one block of {block_length}"
        )
    dropped = values.shape[0] - n * block_length
    if dropped:
        warnings.warn(f"dropping {dropped} trailing rows (partial block)", stacklevel=2)
    return [values[i * block_length : (i + 1) * block_length] for i in range(n)]


def load_csv(
    path,
    *,
    sample_rate_hz: Optional[float] = None,
    block_length: Optional[int] = None,
    block_column: Optional[str] = None,
    groups: Optional[tuple[int, int]] = None,
    region_map: Optional[RegionMap] = None,
    region_pair: Optional[tuple[str, str]] = None,
    labels: Optional[Sequence[int]] = None,
    metadata_path=None,
    strict: bool = True,
) -> MtsDataset:
    """Load a channels-as-columns CSV into a segmented dataset.

    The file must have one header row naming the channels and a numeric
    body.  Blocks come either from a fixed ``block_length`` or from a
    ``block_column`` whose value identifies the block of each row.
    Channel groups come either from ``groups=(p, q)`` (first p columns
    are X, next q are Y) or from a ``region_map`` plus ``region_pair``.

    An optional JSON metadata sidecar may supply ``block_length``,
    ``labels``, ``regions`` and ``sample_rate_hz``; explicit keyword
    arguments win over the sidecar.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")

    meta: dict = {}
    if metadata_path is not None:
        mpath = Path(metadata_path)
        if not mpath.exists():
            raise ConfigError(f"metadata file not found: {mpath}")
        meta = json.loads(mpath.read_text(encoding="utf-8"))

    if block_length is None:
        block_length = meta.get("block_length")
    if labels is None:
        labels = meta.get("labels")
    if sample_rate_hz is None:
        sample_rate_hz = meta.get("sample_rate_hz")
    if region_map is None and "regions" in meta:
        region_map = RegionMap(regions=meta["regions"])
    if sample_rate_hz is None:
        raise ConfigError("sample_rate_hz missing (argument or metadata)")

    header, values = _read_table(path)

    if block_column is not None:
        if block_column not in header:
            raise ConfigError(f"block column {block_column!r} not in header")
        bc = header.index(block_column)
        ids = values[:, bc]
        keep = [i for i in range(len(header)) if i != bc]
        values = values[:, keep]
        header = [header[i] for i in keep]
        # consecutive runs of equal ids form the blocks
        change = np.flatnonzero(np.diff(ids)) + 1
        parts = np.split(values, change)
    elif block_length is not None:
        parts = segment_rows(values, int(block_length))
    else:
        parts = [values]

    if region_map is not None:
        if region_pair is None:
            raise ConfigError("region_pair required when loading with a region map")
        a, b = region_pair
        for name in (a, b):
            if name not in region_map.regions:
                raise ConfigError(f"unknown region {name!r}")
        if a == b:
            raise ConfigError("region pair must name two different regions")
        wanted = list(region_map.regions[a]) + list(region_map.regions[b])
        missing = [ch for ch in wanted if ch not in header]
        if missing:
            raise ConfigError(f"channels named in regions but absent from CSV: {missing}")
        cols = [header.index(ch) for ch in wanted]
        parts = [part[:, cols] for part in parts]
        header = wanted
        p, q = len(region_map.regions[a]), len(region_map.regions[b])
    elif groups is not None:
        p, q = int(groups[0]), int(groups[1])
        if p + q != len(header):
            raise ConfigError(f"groups ({p},{q}) do not cover the {len(header)} channels")
    else:
        raise ConfigError("either groups=(p,q) or a region map is required")

    if labels is not None and len(labels) != len(parts):
        raise ConfigError(f"{len(labels)} labels for {len(parts)} blocks")

    blocks = [
        MtsBlock(
            data=part,
            p=p,
            q=q,
            sample_rate_hz=float(sample_rate_hz),
            channel_names=tuple(header),
            label=None if labels is None else int(labels[i]),
        )
        for i, part in enumerate(parts)
    ]
    return MtsDataset(blocks=tuple(blocks), strict=strict)


def format_float(v: float) -> str:
    """Canonical decimal formatting: shortest round-trip repr of a float.

    Guarantees load -> save -> load reproduces float64 values bit for bit.
    """
    return repr(float(v))


def save_csv(dataset: MtsDataset, path, metadata_path=None) -> None:
    """Export a dataset to the same CSV dialect (blocks concatenated).

    Values use shortest round-trip decimal formatting so a reload yields
    bit-identical float64 data.  When ``metadata_path`` is given, block
    length and labels are written there as JSON.
    """
    path = Path(path)
    names = dataset.channel_names or tuple(
        f"ch{i}" for i in range(dataset.p + dataset.q)
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for block in dataset.blocks:
            for row in block.data:
                writer.writerow([format_float(v) for v in row])
    if metadata_path is not None:
        meta = {
            "block_length": dataset.blocks[0].n_samples,
            "sample_rate_hz": dataset.sample_rate_hz,
        }
        labels = dataset.labels
        if labels is not None:
            meta["labels"] = list(labels)
        Path(metadata_path).write_text(
            json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def select_regions(
    dataset: MtsDataset, region_map: RegionMap, pair: tuple[str, str]
) -> MtsDataset:
    """Restrict a dataset to two regions: X = first region, Y = second.

    Channel order is deterministic: region-A channels in map order, then
    region-B channels.  Block structure and labels are preserved.
    """
    a, b = pair
    if a == b:
        raise ConfigError(f"region pair must name two different regions, got ({a!r}, {a!r})")
    for name in (a, b):
        if name not in region_map.regions:
            raise ConfigError(f"unknown region {name!r}")
    names = dataset.channel_names
    if names is None:
        raise ConfigError("dataset has no channel names; cannot select regions")
    wanted = list(region_map.regions[a]) + list(region_map.regions[b])
    missing = [ch for ch in wanted if ch not in names]
    if missing:
        raise ConfigError(f"channels named in regions but absent from dataset: {missing}")
    cols = [names.index(ch) for ch in wanted]
    p, q = len(region_map.regions[a]), len(region_map.regions[b])
    blocks = [
        MtsBlock(
            data=block.data[:, cols],
            p=p,
            q=q,
            sample_rate_hz=block.sample_rate_hz,
            channel_names=tuple(wanted),
            label=block.label,
        )
        for block in dataset.blocks
    ]
    return MtsDataset(blocks=tuple(blocks), band=dataset.band, strict=dataset.strict)
