"""Dataset manifests: CSV loading, validation, and per-stage label derivation.

A manifest is a CSV file with header ``path,diagnosis,tirads``. Lines starting
with ``#`` are comments. Each row names one grayscale image, its diagnosis
(``benign`` or ``malignant``) and its TI-RADS grade (``2``, ``3``, ``4a``,
``4b``, ``4c``, ``5`` or ``unknown``; an empty field reads as ``unknown``).
"""

import csv
import logging
from dataclasses import dataclass

__all__ = [
    "ManifestEntry",
    "Manifest",
    "load_manifest",
    "stage_labels",
    "STAGE_ONE",
    "STAGE_TWO",
]

logger = logging.getLogger(__name__)

STAGE_ONE = 1
STAGE_TWO = 2

_HEADER = ["path", "diagnosis", "tirads"]
_TIRADS_FOR = {
    "benign": frozenset({"2", "3", "unknown"}),
    "malignant": frozenset({"4a", "4b", "4c", "5", "unknown"}),
}
_TIRADS_LOW = frozenset({"4a", "4b", "4c"})


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    diagnosis: str
    tirads: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple

    def __len__(self):
        return len(self.entries)


def load_manifest(path) -> Manifest:
    """Load and validate a manifest CSV.

    Raises ValueError with the offending row number for malformed rows,
    unknown diagnosis values, TIRADS grades inconsistent with the diagnosis,
    and duplicate image paths.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        numbered = [(n, line) for n, line in enumerate(fh, start=1) if not line.lstrip().startswith("#")]
    numbered = [(n, line) for n, line in numbered if line.strip()]
    if not numbered:
        raise ValueError("manifest %s is empty" % path)
    rows = list(csv.reader([line for _, line in numbered]))
    header = [c.strip().lower() for c in rows[0]]
    if header != _HEADER:
        raise ValueError(
            "manifest %s: expected header %s, got %s (row %d)"
            % (path, ",".join(_HEADER), ",".join(header), numbered[0][0])
        )
    entries = []
    seen = {}
    for (line_no, _), row in zip(numbered[1:], rows[1:]):
        if len(row) != 3:
            raise ValueError("manifest %s row %d: expected 3 columns, got %d" % (path, line_no, len(row)))
        img_path = row[0].strip()
        diagnosis = row[1].strip().lower()
        tirads = row[2].strip().lower() or "unknown"
        if not img_path:
            raise ValueError("manifest %s row %d: empty image path" % (path, line_no))
        if diagnosis not in _TIRADS_FOR:
            raise ValueError(
                "manifest %s row %d: unknown diagnosis %r (expected benign or malignant)"
                % (path, line_no, diagnosis)
            )
        if tirads not in _TIRADS_FOR[diagnosis]:
            raise ValueError(
                "manifest %s row %d: inconsistent tirads for %s: %r" % (path, line_no, diagnosis, tirads)
            )
        if img_path in seen:
            raise ValueError(
                "manifest %s row %d: duplicate path %r (first seen row %d)"
                % (path, line_no, img_path, seen[img_path])
            )
        seen[img_path] = line_no
        entries.append(ManifestEntry(img_path, diagnosis, tirads))
    return Manifest(entries=tuple(entries))


def stage_labels(manifest: Manifest, stage: int) -> list:
    """Derive (path, label) pairs for a classification stage.

    Stage 1 keeps every entry: benign -> 0, malignant -> 1. Stage 2 keeps only
    malignant entries with a known TIRADS grade: 4a/4b/4c -> 0, 5 -> 1;
    entries with unknown TIRADS are dropped with a logged warning count.
    """
    if stage == STAGE_ONE:
        return [(e.path, 0 if e.diagnosis == "benign" else 1) for e in manifest.entries]
    if stage != STAGE_TWO:
        raise ValueError("stage must be 1 or 2, got %r" % (stage,))
    malignant = [e for e in manifest.entries if e.diagnosis == "malignant"]
    if not malignant:
        raise ValueError("stage 2 requested but the manifest has zero malignant entries")
    dropped = sum(1 for e in malignant if e.tirads == "unknown")
    if dropped:
        logger.warning("stage 2: excluded %d malignant entries with unknown tirads", dropped)
    pairs = [(e.path, 0 if e.tirads in _TIRADS_LOW else 1) for e in malignant if e.tirads != "unknown"]
    n_low = sum(1 for _, lab in pairs if lab == 0)
    n_high = len(pairs) - n_low
    if n_low == 0 or n_high == 0:
        raise ValueError(
            "stage 2 needs at least one entry in each TIRADS group (4a/4b/4c vs 5); "
            "got %d and %d" % (n_low, n_high)
        )
    return pairs
