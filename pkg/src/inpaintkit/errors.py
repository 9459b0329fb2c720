"""Exception types shared across inpaintkit modules."""


class InpaintKitError(Exception):
    """Base class for all inpaintkit errors."""


class MalformedRecord(InpaintKitError):
    """An NDJSON record could not be parsed (strict mode only)."""

    def __init__(self, line_no: int, cause: str):
        super().__init__(f"line {line_no}: {cause}")
        self.line_no = line_no
        self.cause = cause


class EmptyCorpus(InpaintKitError):
    """Sampling was requested from a corpus with no strokes."""


class IndexOutOfRange(InpaintKitError, IndexError):
    """A recipe references a stroke index outside the corpus."""


class DimensionMismatch(InpaintKitError, ValueError):
    """Images / masks / vectors that must share a shape do not."""


class AllInfinite(InpaintKitError, ValueError):
    """Eikonal update called with no finite neighbor distance."""


class DuplicateId(InpaintKitError, ValueError):
    """Two index entries carry the same id."""


class ZeroVector(InpaintKitError, ValueError):
    """A descriptor has zero norm; cosine similarity is undefined."""


class ShapeMismatch(InpaintKitError, ValueError):
    """Feature stacks disagree in layer count or layer shapes."""


class NonFinite(InpaintKitError, ValueError):
    """A loss term is NaN or infinite."""


class InvalidDistribution(InpaintKitError, ValueError):
    """A probability row is negative, non-finite or does not sum to 1."""


class TooSmall(InpaintKitError, ValueError):
    """Input image is smaller than the metric's window."""
