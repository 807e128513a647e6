"""Exception types raised across the package."""


class KwsError(Exception):
    """Base class for all kwstream errors."""


# --- keyword construction ---

class EmptyKeyword(KwsError):
    """Keyword has no tokens."""


class DegenerateKeyword(KwsError):
    """Single-token keywords are rejected: with per-frame entry resets the
    next-to-last trellis state coincides with the entry state, so every frame
    would score the bare bonus."""


class BlankInKeyword(KwsError):
    """Keyword contains the blank token."""


# --- decoding ---

class DimensionMismatch(KwsError):
    """Frame vector length or token id is inconsistent with the vocabulary."""


class InstanceTooLarge(KwsError):
    """Instance exceeds the brute-force enumeration guard."""


# --- score streams ---

class LengthMismatch(KwsError):
    """Two score streams that must be aligned have different lengths."""


# --- evaluation ---

class NoNegativeData(KwsError):
    """FAR is undefined without negative audio."""


class EmptyBucket(KwsError):
    """An SNR bucket contains no positive utterances."""


# --- synthesis ---

class SpanTooLong(KwsError):
    """A keyword span cannot fit under the decoder timeout."""


# --- file formats ---

class BadMagic(KwsError):
    """Posterior file does not start with the expected magic bytes."""


class BadVersion(KwsError):
    """Posterior file has an unsupported format version."""


class TruncatedFile(KwsError):
    """File size does not match the header dimensions."""


class UnknownWord(KwsError):
    """Word missing from the lexicon."""


class UnknownPhone(KwsError):
    """Phone missing from the phone table."""


class DuplicateId(KwsError):
    """Manifest contains the same utterance id twice."""
