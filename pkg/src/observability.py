"""
Observability Module

Logging setup plus OpenTelemetry tracing for pipeline stages.

Exporters:
- Azure Monitor when APPLICATIONINSIGHTS_CONNECTION_STRING is set
- Console span exporter when TINK_OTEL_CONSOLE=true
- otherwise spans are created but not exported
"""

import logging
import os
from contextlib import contextmanager
from typing import Iterator

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

logger = logging.getLogger(__name__)

SERVICE_NAME = "tink"

_configured = False


def setup_observability(level: str | None = None) -> None:
    """Configure root logging and the tracer provider (idempotent)."""
    global _configured
    if _configured:
        return

    level_name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    connection_string = os.getenv("APPLICATIONINSIGHTS_CONNECTION_STRING")
    if connection_string:
        # Azure Monitor installs its own tracer provider
        from azure.monitor.opentelemetry import configure_azure_monitor

        configure_azure_monitor(connection_string=connection_string)
        logger.info("📊 Azure Monitor exporter configured")
    else:
        provider = TracerProvider(resource=Resource.create({"service.name": SERVICE_NAME}))
        if os.getenv("TINK_OTEL_CONSOLE", "false").lower() == "true":
            provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter()))
            logger.info("📊 Console span exporter configured")
        trace.set_tracer_provider(provider)

    _configured = True


def get_tracer(name: str = SERVICE_NAME) -> trace.Tracer:
    return trace.get_tracer(name)


@contextmanager
def stage_span(stage: str, **attributes: str | int | float) -> Iterator[trace.Span]:
    """Run a pipeline stage inside a ``tink.<stage>`` span."""
    with get_tracer().start_as_current_span(f"tink.{stage}") as span:
        for key, value in attributes.items():
            span.set_attribute(f"tink.{key}", value)
        yield span
