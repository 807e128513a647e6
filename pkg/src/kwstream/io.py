"""File formats: binary posteriorgrams, JSONL manifests, lexicons, phone tables.

Posterior files are a fixed little-endian layout::

    bytes 0..3    magic  b"KWSP"
    bytes 4..7    uint32 version (currently 1)
    bytes 8..11   uint32 T  (frames)
    bytes 12..15  uint32 V  (vocabulary size, token 0 = blank)
    bytes 16..    T*V float32, row-major, natural-log posteriors

Score files produced by the pipeline reuse the same container with V = 1;
their payload is linear unit-interval scores rather than log posteriors.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    BadVersion,
    DuplicateId,
    TruncatedFile,
    UnknownPhone,
    UnknownWord,
)

MAGIC = b"KWSP"
VERSION = 1
_HEADER = struct.Struct("<4sIII")

#: Default frame stride of the acoustic front end, in milliseconds.
DEFAULT_FRAME_MS = 30.0

#: Monophone inventory: CMU phone set (stressed vowels spelled out) plus SIL.
#: Token id = 1-based position in this list; id 0 is reserved for the blank.
CMU_PHONES = [
    "AA0", "AA1", "AA2", "AE0", "AE1", "AE2", "AH0", "AH1", "AH2",
    "AO0", "AO1", "AO2", "AW0", "AW1", "AW2", "AY0", "AY1", "AY2",
    "B", "CH", "D", "DH",
    "EH0", "EH1", "EH2", "ER0", "ER1", "ER2", "EY0", "EY1", "EY2",
    "F", "G", "HH",
    "IH0", "IH1", "IH2", "IY0", "IY1", "IY2",
    "JH", "K", "L", "M", "N", "NG",
    "OW0", "OW1", "OW2", "OY0", "OY1", "OY2",
    "P", "R", "S", "SH", "T", "TH",
    "UH0", "UH1", "UH2", "UW0", "UW1", "UW2",
    "V", "W", "Y", "Z", "ZH", "SIL",
]

#: Small pronunciation list shipped for demos and synthetic corpora.
DEMO_LEXICON = {
    "HEY": ["HH", "EY1"],
    "SNIPS": ["S", "N", "IH1", "P", "S"],
    "ALEXA": ["AH0", "L", "EH1", "K", "S", "AH0"],
    "COMPUTER": ["K", "AH0", "M", "P", "Y", "UW1", "T", "ER0"],
    "JARVIS": ["JH", "AA1", "R", "V", "AH0", "S"],
    "OKAY": ["OW2", "K", "EY1"],
}


@dataclass
class PosteriorGram:
    """Per-frame log posteriors over the token inventory (blank = token 0)."""

    logp: np.ndarray
    frame_duration_ms: float = DEFAULT_FRAME_MS

    def __post_init__(self):
        self.logp = np.asarray(self.logp)
        if self.logp.ndim != 2:
            raise ValueError(f"posteriorgram must be 2-D, got shape {self.logp.shape}")
        if self.frame_duration_ms <= 0:
            raise ValueError("frame_duration_ms must be positive")

    @property
    def num_frames(self) -> int:
        return self.logp.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logp.shape[1]

    def validate(self, tol: float = 1e-3) -> bool:
        """Check that each frame is (close to) a normalized distribution.

        Violations are reported as warnings, not errors; returns True when
        every frame is within ``tol`` of summing to one.
        """
        mass = np.exp(self.logp.astype(np.float64)).sum(axis=1)
        bad = np.flatnonzero(np.abs(mass - 1.0) > tol)
        if bad.size:
            warnings.warn(
                f"{bad.size} frame(s) deviate from unit probability mass "
                f"(first at frame {bad[0] + 1}, mass {mass[bad[0]]:.6f})",
                stacklevel=2,
            )
            return False
        return True


def save_posteriors(pg: PosteriorGram, path) -> None:
    """Write a posteriorgram in the binary KWSP layout (float32)."""
    path = Path(path)
    data = np.ascontiguousarray(pg.logp, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, pg.num_frames, pg.vocab_size))
        fh.write(data.tobytes())


def load_posteriors(path, frame_duration_ms: float = DEFAULT_FRAME_MS,
                    validate: bool = True) -> PosteriorGram:
    """Load a KWSP posterior file, checking magic, version, and size."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, header needs {_HEADER.size}")
    magic, version, t, v = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise BadVersion(f"{path}: version {version}, expected {VERSION}")
    expected = _HEADER.size + 4 * t * v
    if len(raw) != expected:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, expected {expected} for T={t} V={v}")
    mat = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(t, v)
    pg = PosteriorGram(mat.copy(), frame_duration_ms=frame_duration_ms)
    if validate:
        pg.validate()
    return pg


def save_scores(scores: np.ndarray, path) -> None:
    """Write a score sequence as a T x 1 KWSP file (linear [0, 1] values)."""
    arr = np.asarray(scores, dtype=np.float64).reshape(-1, 1)
    save_posteriors(PosteriorGram(arr), path)


def load_scores(path) -> np.ndarray:
    """Load a score file written by :func:`save_scores` as a 1-D float64 array."""
    pg = load_posteriors(path, validate=False)
    if pg.vocab_size != 1:
        raise TruncatedFile(f"{path}: score files must have V=1, got V={pg.vocab_size}")
    return pg.logp.astype(np.float64).ravel()


@dataclass
class ManifestEntry:
    id: str
    main_path: str
    label: str
    duration_s: float
    snr_db: float | None = None
    inter_path: str | None = None


@dataclass
class Manifest:
    """Utterance listing; paths resolve relative to the manifest's directory."""

    entries: list[ManifestEntry]
    base_dir: Path = field(default_factory=Path)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def resolve(self, rel_path: str) -> Path:
        return self.base_dir / rel_path

    def positives(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.label == "positive"]

    def negatives(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.label == "negative"]


def save_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        for e in manifest.entries:
            rec = {
                "id": e.id,
                "main_path": e.main_path,
                "label": e.label,
                "snr_db": e.snr_db,
                "duration_s": e.duration_s,
            }
            if e.inter_path is not None:
                rec["inter_path"] = e.inter_path
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_manifest(path) -> Manifest:
    path = Path(path)
    entries = []
    seen = set()
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec["id"] in seen:
                raise DuplicateId(f"{path}:{line_no}: duplicate utterance id {rec['id']!r}")
            seen.add(rec["id"])
            entries.append(ManifestEntry(
                id=rec["id"],
                main_path=rec["main_path"],
                label=rec["label"],
                duration_s=float(rec["duration_s"]),
                snr_db=None if rec.get("snr_db") is None else float(rec["snr_db"]),
                inter_path=rec.get("inter_path"),
            ))
    return Manifest(entries, base_dir=path.parent)


def load_phone_table(path) -> dict[str, int]:
    """Read one phone per line; token id = line number (1-based, 0 = blank)."""
    table = {}
    with open(path) as fh:
        for idx, line in enumerate(fh, start=1):
            phone = line.strip()
            if not phone:
                continue
            table[phone] = idx
    return table


def save_phone_table(phones: list[str], path) -> None:
    Path(path).write_text("\n".join(phones) + "\n")


def load_lexicon(path) -> dict[str, list[str]]:
    """Read ``WORD PH1 PH2 ...`` lines; first pronunciation wins for homographs."""
    lex: dict[str, list[str]] = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            word, phones = parts[0].upper(), parts[1:]
            if word in lex:
                warnings.warn(f"ignoring alternate pronunciation for {word}", stacklevel=2)
                continue
            lex[word] = phones
    return lex


def save_lexicon(lexicon: dict[str, list[str]], path) -> None:
    with open(path, "w") as fh:
        for word in sorted(lexicon):
            fh.write(word + " " + " ".join(lexicon[word]) + "\n")


def keyword_to_tokens(phrase: str, lexicon: dict[str, list[str]],
                      phone_table: dict[str, int]) -> list[int]:
    """Map a keyword phrase to its token id sequence.

    Per-word phone sequences are concatenated as-is; blank interleaving is
    the decoder's job, not the lexicon's.
    """
    tokens: list[int] = []
    for word in phrase.upper().split():
        if word not in lexicon:
            raise UnknownWord(f"word {word!r} not in lexicon")
        for phone in lexicon[word]:
            if phone not in phone_table:
                raise UnknownPhone(f"phone {phone!r} (word {word!r}) not in phone table")
            tokens.append(phone_table[phone])
    return tokens


def default_phone_table() -> dict[str, int]:
    """Phone table over :data:`CMU_PHONES` (70 phones, ids 1..70)."""
    return {p: i for i, p in enumerate(CMU_PHONES, start=1)}
