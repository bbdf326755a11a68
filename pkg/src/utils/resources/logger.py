# /src/utils/resources/logger.py

import logging
import sys
from typing import Any, Optional

import structlog
from pydantic import ValidationError

from src.utils.config.settings import get_runtime_settings, settings


class Logger:
    _logger: Optional[Any] = None

    @staticmethod
    def get_logger() -> Any:
        if Logger._logger is None:
            log_config = settings.get_logging_config()
            app_name = settings.get("app.name", "app")
            try:
                override = get_runtime_settings().log_level
            except ValidationError:
                override = None
            level_name = (override or log_config.get("level") or "WARNING").upper()
            level = logging.getLevelName(level_name)
            if not isinstance(level, int):
                level = logging.WARNING

            if log_config.get("renderer", "console") == "json":
                renderer: Any = structlog.processors.JSONRenderer(sort_keys=True)
            else:
                renderer = structlog.dev.ConsoleRenderer(colors=False)

            structlog.configure(
                processors=[
                    structlog.processors.add_log_level,
                    structlog.processors.StackInfoRenderer(),
                    structlog.processors.format_exc_info,
                    renderer,
                ],
                wrapper_class=structlog.make_filtering_bound_logger(level),
                logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
                cache_logger_on_first_use=False,
            )
            Logger._logger = structlog.get_logger(app_name).bind(app=app_name)
        return Logger._logger


logger = Logger.get_logger()
