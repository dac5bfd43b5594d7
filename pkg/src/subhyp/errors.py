"""Exception hierarchy.

Every error raised by the library derives from :class:`GeometryError` so the
CLI can turn it into a machine-readable JSON record with exit code 1.
"""

from __future__ import annotations


class GeometryError(Exception):
    """Base class for all domain / construction failures."""

    code = "GeometryError"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self), "details": self.details}


def _make(name: str, doc: str, *bases: type) -> type:
    return type(name, (GeometryError, *bases), {"code": name, "__doc__": doc})


NotSimple = _make("NotSimple", "Polygon edges intersect away from shared endpoints.")
Degenerate = _make("Degenerate", "Repeated vertices or zero-length / folded edges.")
TooFewVertices = _make("TooFewVertices", "Fewer than three distinct vertices.")
PointOutside = _make("PointOutside", "A query point is not in the open domain.")
GridTooLarge = _make("GridTooLarge", "Requested raster exceeds the cell budget.")
NoBoundaryContact = _make("NoBoundaryContact", "Square boundary does not meet the domain boundary.")
BasePointInvalid = _make("BasePointInvalid", "Base point is not on both boundaries.")
AnchorNotInOmega = _make("AnchorNotInOmega", "Anchor point lies outside the domain.")
AnchorNotOnBoundaryOfS = _make("AnchorNotOnBoundaryOfS", "Anchor point is not on the host square boundary.")
ResolutionInsufficient = _make("ResolutionInsufficient", "Grid verdicts disagree between h and h/2.")
NotSeparable = _make("NotSeparable", "No separating square found down to grid resolution.")
ChainTooLong = _make("ChainTooLong", "Square chain exceeded its length or resolution budget.")
DegenerateDelta = _make("DegenerateDelta", "Hat radius collapsed below tolerance.")
ConnectorNotInOmega = _make("ConnectorNotInOmega", "A connector segment leaves the domain.")
ComponentTouchesTooMany = _make("ComponentTouchesTooMany", "A complement component touches non-consecutive squares.")
PreconditionViolated = _make("PreconditionViolated", "Inputs do not satisfy the operation's preconditions.")
HatTooLarge = _make("HatTooLarge", "Hat square too large relative to its narrow neighbours.")
PathLeavesDomain = _make("PathLeavesDomain", "Polyline is not contained in the open domain.")
Disconnected = _make("Disconnected", "Query points lie in different grid components.")
SourceOutsideNarrowPath = _make("SourceOutsideNarrowPath", "Source point is not covered by the narrow-path grid.")
PathUnavailable = _make("PathUnavailable", "No admissible grid path to the query point.")
# Also a ValueError, as scikit-learn callers expect for invalid parameters.
BadParams = _make("BadParams", "Generator or configuration parameters are invalid.", ValueError)
