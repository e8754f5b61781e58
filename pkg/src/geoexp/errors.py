"""Exception types shared across the package."""


class GeoExpError(Exception):
    """Base class for all geoexp failures."""


class DegenerateGradient(GeoExpError):
    """Smoothed gradient norm below threshold (medial axis or field extremum)."""


class NoConvergence(GeoExpError):
    """Projection failed to reach the zero set within the iteration budget."""


class InvalidPrimitive(GeoExpError):
    """CSG node carries invalid parameters or structure."""


class EmptyInput(GeoExpError):
    """Mesh or point cloud input is empty/degenerate."""


class AntipodalNormals(GeoExpError):
    """Transport between opposite normals has no well-defined smallest rotation."""


class AlignmentProbeFailed(GeoExpError):
    """A projection inside the alignment root solve did not converge."""


class PathAborted(GeoExpError):
    """A radial curve could not be extended; it is truncated at its last good step."""


class SeedFailure(GeoExpError):
    """The seed point could not be projected onto the surface."""


class TraceFailed(GeoExpError):
    """Too many radial curves truncated for the trace to be usable."""


class SolveFailure(GeoExpError):
    """A linear solve produced an unacceptable residual."""


class DegenerateGrid(GeoExpError):
    """Traced grid too small to fit a spline surface."""


class OutOfDisc(GeoExpError):
    """Evaluation requested outside the map's tangent-space disc."""


class TriangulationFailure(GeoExpError):
    """Delaunay triangulation of the sample set failed."""


class EmptyCandidates(GeoExpError):
    """Preimage selection requires at least one candidate."""


class DegenerateTriangle(GeoExpError):
    """A uv triangle has (near-)zero area."""


class OverlapViolation(GeoExpError):
    """Consecutive charts of a curve solve do not overlap."""


class TransitionLost(GeoExpError):
    """A control point left the chart overlap during the curve solve."""

    def __init__(self, segment: int, message: str = ""):
        self.segment = segment
        super().__init__(message or f"control point of segment {segment} left the chart overlap")


class SceneError(GeoExpError):
    """Scene configuration file is malformed."""
