"""
Unit tests for logging and tracing setup.
"""

import os
from unittest.mock import patch

from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter

from src import observability


class TestStageSpan:
    def test_span_name_and_attributes(self):
        # Arrange
        exporter = InMemorySpanExporter()
        provider = TracerProvider()
        provider.add_span_processor(SimpleSpanProcessor(exporter))

        # Act
        with patch.object(observability, "get_tracer", return_value=provider.get_tracer("test")):
            with observability.stage_span("refine", job_id="j1", iterations=5):
                pass

        # Assert
        (span,) = exporter.get_finished_spans()
        assert span.name == "tink.refine"
        assert span.attributes["tink.job_id"] == "j1"
        assert span.attributes["tink.iterations"] == 5


class TestSetup:
    def test_setup_is_idempotent(self):
        env = {"APPLICATIONINSIGHTS_CONNECTION_STRING": "", "TINK_OTEL_CONSOLE": "false"}
        with patch.dict(os.environ, env), patch.object(observability, "_configured", False):
            observability.setup_observability("DEBUG")
            assert observability._configured

            with patch("logging.basicConfig") as basic_config:
                observability.setup_observability("DEBUG")

            basic_config.assert_not_called()
