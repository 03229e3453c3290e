"""Exception hierarchy shared by every module.

``SeamforgeError`` subclasses are domain errors (CLI exit code 1);
``ObjParseError`` and other I/O failures map to exit code 2.
"""


class SeamforgeError(Exception):
    """Base class for all domain errors."""

    kind = "domain"


class MeshError(SeamforgeError):
    kind = "mesh"


class ObjParseError(MeshError):
    kind = "io"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IndexOutOfRangeError(ObjParseError):
    pass


class NonManifoldError(MeshError):
    kind = "non_manifold"

    def __init__(self, edge, n_faces):
        self.edge = edge
        self.n_faces = n_faces
        super().__init__(f"edge {edge} has {n_faces} incident faces (max 2)")


class DegenerateMeshError(MeshError):
    kind = "degenerate"


class MissingUVError(SeamforgeError):
    kind = "missing_uv"


class ChainError(SeamforgeError):
    kind = "chain"


class DuplicateEdgeError(ChainError):
    kind = "duplicate_edge"


class MalformedTokensError(SeamforgeError):
    kind = "malformed_tokens"


class NonSeparatingLoopError(SeamforgeError):
    kind = "non_separating_loop"


class BoundaryCoincidentError(SeamforgeError):
    kind = "boundary_coincident"


class ExhaustedTargetError(SeamforgeError):
    kind = "exhausted_target"


class NonDiskError(SeamforgeError):
    kind = "non_disk"


class SingularSystemError(SeamforgeError):
    kind = "singular_system"


class TargetMaskedError(SeamforgeError):
    kind = "target_masked"


class DivergenceError(SeamforgeError):
    kind = "divergence"
