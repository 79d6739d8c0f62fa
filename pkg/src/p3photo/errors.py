"""Exception hierarchy shared across the package."""


class P3Error(Exception):
    """Base class for every error raised by this package."""


# --- JPEG codec -------------------------------------------------------------

class CodecError(P3Error):
    """Base class for JPEG stream errors."""


class UnsupportedFormat(CodecError):
    """Stream is valid JPEG but outside the supported baseline subset."""


class CorruptStream(CodecError):
    """Marker grammar, Huffman data or segment lengths are broken."""


class InvalidImage(CodecError):
    """A coefficient-level image violates its structural invariants."""


# --- split / merge ----------------------------------------------------------

class InconsistentPair(P3Error):
    """Public/secret parts disagree: a nonzero secret AC sits where the
    public value is not the threshold.  Signals tampering or a wrong T."""


class DimensionMismatch(P3Error):
    """Two images that must share geometry do not."""


# --- pixel transforms -------------------------------------------------------

class GeometryError(P3Error):
    """A transform step does not fit the image it is applied to."""


class NoCandidateFits(P3Error):
    """No calibration candidate produces the observed output geometry."""


class CalibrationFailed(P3Error):
    """Calibration ran but could not produce a usable transform."""


# --- secret envelope --------------------------------------------------------

class EnvelopeError(P3Error):
    """Base class for sealed-container errors."""


class BadMagic(EnvelopeError):
    """Container does not start with the expected magic bytes."""


class BadVersion(EnvelopeError):
    """Container version is not supported."""


class Truncated(EnvelopeError):
    """Container is shorter than its own header claims."""


class AuthFailure(EnvelopeError):
    """Authentication failed: wrong key or tampered data (indistinguishable)."""


# --- metrics ----------------------------------------------------------------

class NoNonzeroCoefficients(P3Error):
    """Threshold guessing needs at least one nonzero AC coefficient."""


# --- provider client --------------------------------------------------------

class TransportError(P3Error):
    """HTTP-level failure talking to the provider."""


class MissingSecret(TransportError):
    """The provider has no secret blob stored under the requested id."""
