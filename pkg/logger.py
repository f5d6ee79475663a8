"""
Structured logging configuration for the simultaneous assignment toolkit.
Includes solver timing, error tracking and a performance decorator.
"""
import functools
import json
import logging
import logging.handlers
import os
import time
import traceback
from typing import List, Dict, Any, Optional
from datetime import datetime
from config import LOG_LEVEL, LOG_FORMAT, LOG_FILE, LOG_MAX_SIZE, LOG_BACKUP_COUNT

_configured_loggers: List[logging.Logger] = []


class PerformanceLogger:
    """Tracks solver timings and error counts per operation."""

    def __init__(self, max_samples: int = 100):
        self.metrics: Dict[str, List[float]] = {}
        self.error_counts: Dict[str, int] = {}
        self.max_samples = max_samples

    def record(self, operation: str, duration: float):
        """Record one completed run of an operation."""
        samples = self.metrics.setdefault(operation, [])
        samples.append(duration)
        if len(samples) > self.max_samples:
            del samples[:-self.max_samples]

    def record_error(self, error_type: str):
        """Record an error occurrence."""
        self.error_counts[error_type] = self.error_counts.get(error_type, 0) + 1

    def get_performance_stats(self) -> Dict[str, Any]:
        """Get performance statistics."""
        stats = {}
        for operation, times in self.metrics.items():
            if times:
                stats[operation] = {
                    'count': len(times),
                    'avg_time': sum(times) / len(times),
                    'min_time': min(times),
                    'max_time': max(times),
                    'recent_avg': sum(times[-10:]) / min(len(times), 10)
                }
        return stats

    def get_error_stats(self) -> Dict[str, int]:
        """Get error statistics."""
        return self.error_counts.copy()

    def reset(self):
        self.metrics.clear()
        self.error_counts.clear()


class StructuredFormatter(logging.Formatter):
    """Formatter that appends the record's structured data as JSON."""

    def format(self, record):
        structured = dict(getattr(record, 'structured_data', {}) or {})

        for key in ('operation', 'duration', 'edges'):
            if hasattr(record, key):
                structured.setdefault(key, getattr(record, key))

        formatted = super().format(record)
        if structured:
            formatted += f" | {json.dumps(structured, default=str, sort_keys=True)}"
        return formatted


class ErrorTracker:
    """Keeps the most recent solver failures with their context."""

    def __init__(self, max_errors: int = 100):
        self.errors: List[Dict[str, Any]] = []
        self.max_errors = max_errors

    def add_error(self, error: Exception, context: Optional[Dict[str, Any]] = None):
        """Add an error to the tracker."""
        self.errors.append({
            'timestamp': datetime.now().isoformat(),
            'error_type': type(error).__name__,
            'error_message': str(error),
            'traceback': traceback.format_exc(),
            'context': context or {}
        })
        if len(self.errors) > self.max_errors:
            self.errors = self.errors[-self.max_errors:]

    def get_recent_errors(self, count: int = 10) -> List[Dict[str, Any]]:
        """Get the most recent errors."""
        return self.errors[-count:] if self.errors else []

    def get_error_summary(self) -> Dict[str, int]:
        """Get a summary of error types."""
        summary: Dict[str, int] = {}
        for error in self.errors:
            summary[error['error_type']] = summary.get(error['error_type'], 0) + 1
        return summary

    def clear(self):
        self.errors.clear()


# Global instances
performance_logger = PerformanceLogger()
error_tracker = ErrorTracker()


def setup_logger(name: str = __name__) -> logging.Logger:
    """
    Set up a structured logger with console and optional rotating file handlers.

    Args:
        name: The logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Avoid adding handlers multiple times
    if logger.handlers:
        return logger

    log_level = getattr(logging, LOG_LEVEL.upper(), logging.WARNING)
    logger.setLevel(log_level)
    logger.propagate = False

    formatter = StructuredFormatter(LOG_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if LOG_FILE:
        log_dir = os.path.dirname(LOG_FILE)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

        file_handler = logging.handlers.RotatingFileHandler(
            LOG_FILE,
            maxBytes=LOG_MAX_SIZE,
            backupCount=LOG_BACKUP_COUNT
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    _configured_loggers.append(logger)
    return logger


def get_logger(name: str = __name__) -> logging.Logger:
    """
    Get a logger instance with the given name.

    Args:
        name: The logger name

    Returns:
        Logger instance
    """
    return setup_logger(name)


def set_log_level(level: str):
    """Change the level of every logger configured so far."""
    numeric = getattr(logging, level.upper(), None)
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level}")
    for logger in _configured_loggers:
        logger.setLevel(numeric)
        for handler in logger.handlers:
            handler.setLevel(numeric)


def _instance_size(args) -> Optional[int]:
    # Solver entry points take the instance first.
    if args and hasattr(args[0], 'edges'):
        try:
            return len(args[0].edges)
        except TypeError:
            return None
    return None


def log_performance(operation: str):
    """Decorator to log timing and outcome of a solver entry point."""
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            edges = _instance_size(args)
            start = time.perf_counter()
            logger = get_logger(func.__module__)
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration = time.perf_counter() - start
                performance_logger.record(operation, duration)
                performance_logger.record_error(type(e).__name__)
                error_tracker.add_error(e, {
                    'operation': operation,
                    'edges': edges,
                    'duration': duration
                })
                logger.info(
                    f"Operation '{operation}' failed: {e}",
                    extra={'structured_data': {
                        'operation': operation,
                        'duration': round(duration, 6),
                        'edges': edges,
                        'status': 'error',
                        'error': type(e).__name__
                    }}
                )
                raise
            duration = time.perf_counter() - start
            performance_logger.record(operation, duration)
            logger.debug(
                f"Operation '{operation}' completed",
                extra={'structured_data': {
                    'operation': operation,
                    'duration': round(duration, 6),
                    'edges': edges,
                    'status': 'success'
                }}
            )
            return result
        return wrapper
    return decorator


def get_performance_stats() -> Dict[str, Any]:
    """Get current performance statistics."""
    return performance_logger.get_performance_stats()


def get_error_stats() -> Dict[str, Any]:
    """Get current error statistics."""
    return {
        'error_counts': error_tracker.get_error_summary(),
        'recent_errors': [
            {key: error[key] for key in ('timestamp', 'error_type', 'error_message', 'context')}
            for error in error_tracker.get_recent_errors(5)
        ]
    }
