"""
Unified Exception Handling Module

Provides:
- Custom exception classes for every failure the geometry, optimization
  and pipeline layers can report
- Global exception handlers for the HTTP surface
- Structured error responses
"""

import logging
from fastapi import FastAPI, Request, status
from fastapi.responses import JSONResponse
from pydantic import BaseModel

logger = logging.getLogger(__name__)


# ============================================================================
# Error Response Model
# ============================================================================


class ErrorResponse(BaseModel):
    """Unified error response format"""

    error: str  # Error type
    message: str  # User-friendly error message
    detail: str | None = None  # Detailed info (debug only)


# ============================================================================
# Custom Exception Classes
# ============================================================================


class AppException(Exception):
    """Base application exception"""

    def __init__(
        self,
        message: str = "An error occurred",
        status_code: int = status.HTTP_500_INTERNAL_SERVER_ERROR,
        error_type: str = "InternalError",
    ):
        self.message = message
        self.status_code = status_code
        self.error_type = error_type
        super().__init__(self.message)


class ValidationError(AppException):
    """Invalid input data (malformed mesh, params, manifest...)"""

    def __init__(self, message: str = "Invalid input"):
        super().__init__(
            message=message,
            status_code=status.HTTP_400_BAD_REQUEST,
            error_type="ValidationError",
        )


class ConfigurationError(AppException):
    """Configuration error"""

    def __init__(self, message: str = "Configuration error"):
        super().__init__(
            message=message,
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            error_type="ConfigurationError",
        )


class NonWatertightError(AppException):
    """Mesh fails the edge-manifold check"""

    def __init__(self, edges: list[tuple[int, int]] | None = None):
        self.edges = list(edges or [])
        preview = ", ".join(f"({a},{b})" for a, b in self.edges[:8])
        more = "" if len(self.edges) <= 8 else f" (+{len(self.edges) - 8} more)"
        super().__init__(
            message=f"Mesh is not watertight: {len(self.edges)} bad edges {preview}{more}",
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="NonWatertight",
        )


class EmptySurfaceError(AppException):
    """No sign crossing at the requested iso level"""

    def __init__(self, message: str = "Grid has no sign crossing at the iso level"):
        super().__init__(
            message=message,
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="EmptySurface",
        )


class LatticeMismatchError(AppException):
    """Two grids cannot share a common lattice within the resolution cap"""

    def __init__(self, message: str = "Grids cannot be resampled onto a common lattice"):
        super().__init__(
            message=message,
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="LatticeMismatch",
        )


class IcpDivergedError(AppException):
    """ICP residual above the divergence bound"""

    def __init__(self, rms: float, bound: float, step: int | None = None):
        self.rms = rms
        self.bound = bound
        self.step = step
        where = "" if step is None else f" at path step {step}"
        super().__init__(
            message=f"ICP diverged{where}: rms {rms:.3e} m exceeds bound {bound:.3e} m",
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="IcpDiverged",
        )


class EmptyContactsError(AppException):
    """Contact field carries no contactness mass"""

    def __init__(self, message: str = "Contact field is empty (sum of gamma is 0)"):
        super().__init__(
            message=message,
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="EmptyContacts",
        )


class NonFiniteError(AppException):
    """Energy or gradient became NaN/inf during optimization"""

    def __init__(self, iteration: int, what: str = "energy"):
        self.iteration = iteration
        super().__init__(
            message=f"Non-finite {what} at iteration {iteration}",
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="NonFinite",
        )


class AllInvisibleError(AppException):
    """Every keypoint weight is zero"""

    def __init__(self, message: str = "All keypoint weights are zero"):
        super().__init__(
            message=message,
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="AllInvisible",
        )


class BehindCameraError(AppException):
    """A weighted joint projects from behind the camera"""

    def __init__(self, joint: int, view: int):
        self.joint = joint
        self.view = view
        super().__init__(
            message=f"Joint {joint} has non-positive depth in view {view}",
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="BehindCamera",
        )


class TooShortError(AppException):
    """Sequence too short to filter"""

    def __init__(self, n_frames: int, minimum: int = 3):
        super().__init__(
            message=f"Sequence has {n_frames} frames, at least {minimum} required",
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="TooShort",
        )


class UnstableError(AppException):
    """Rigid-body simulation blew up"""

    def __init__(self, excess: float, limit: float = 1.0):
        super().__init__(
            message=f"Simulation unstable: object moved {excess:.3f} m beyond its free-flight reach (limit {limit} m)",
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            error_type="Unstable",
        )


class StageError(AppException):
    """Failure inside one pipeline stage, tagged with the stage name"""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        cause_type = getattr(cause, "error_type", type(cause).__name__)
        super().__init__(
            message=f"[{stage}] {cause_type}: {cause}",
            status_code=getattr(cause, "status_code", status.HTTP_500_INTERNAL_SERVER_ERROR),
            error_type="StageError",
        )


# ============================================================================
# Global Exception Handlers
# ============================================================================


def register_exception_handlers(app: FastAPI, debug: bool = False) -> None:
    """
    Register global exception handlers

    Args:
        app: FastAPI application instance
        debug: Whether to show detailed error info (should be False in production)
    """

    @app.exception_handler(AppException)
    async def app_exception_handler(
        request: Request, exc: AppException
    ) -> JSONResponse:
        """Handle custom application exceptions"""
        logger.error(f"{exc.error_type}: {exc.message}", exc_info=True)

        return JSONResponse(
            status_code=exc.status_code,
            content=ErrorResponse(
                error=exc.error_type,
                message=exc.message,
                detail=str(exc) if debug else None,
            ).model_dump(),
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        """Handle value errors"""
        logger.warning(f"ValueError: {exc}")

        return JSONResponse(
            status_code=status.HTTP_400_BAD_REQUEST,
            content=ErrorResponse(
                error="ValidationError",
                message="Invalid request parameters",
                detail=str(exc) if debug else None,
            ).model_dump(),
        )

    @app.exception_handler(Exception)
    async def general_exception_handler(
        request: Request, exc: Exception
    ) -> JSONResponse:
        """Handle all uncaught exceptions"""
        logger.exception(f"Unhandled exception: {exc}")

        return JSONResponse(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            content=ErrorResponse(
                error="InternalError",
                message="Internal server error, please try again later",
                detail=str(exc) if debug else None,
            ).model_dump(),
        )
