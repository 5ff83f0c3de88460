"""
Resilience utilities for error recovery and fault tolerance.

Provides retry logic with exponential backoff and a circuit breaker, used to
keep a flaky or broken external simulator from stalling a whole batch.
"""

import asyncio
import logging
import time
from enum import Enum
from functools import wraps
from typing import Any, Callable, Optional

from utils.errors import ExplorerError

logger = logging.getLogger(__name__)


class CircuitState(Enum):
    """Circuit breaker states."""
    CLOSED = "closed"  # Normal operation
    OPEN = "open"  # Failing, reject requests
    HALF_OPEN = "half_open"  # Testing if service recovered


class CircuitBreakerOpenError(ExplorerError):
    """Raised when circuit breaker is open."""
    pass


class CircuitBreaker:
    """
    Simple circuit breaker implementation.

    Stops spawning work against a service after repeated consecutive failures.
    """

    def __init__(
        self,
        failure_threshold: int = 5,
        recovery_timeout: float = 60,
        expected_exception: type = Exception,
        name: str = "circuit",
    ):
        """
        Initialize circuit breaker.

        Args:
            failure_threshold: Number of consecutive failures before opening circuit
            recovery_timeout: Seconds to wait before attempting recovery
            expected_exception: Exception type that triggers circuit breaker
            name: Label used in log lines
        """
        self.failure_threshold = failure_threshold
        self.recovery_timeout = recovery_timeout
        self.expected_exception = expected_exception
        self.name = name

        self.failure_count = 0
        self.last_failure_time: Optional[float] = None
        self.state = CircuitState.CLOSED

    def _before_call(self) -> None:
        if self.state != CircuitState.OPEN:
            return
        if self.last_failure_time and \
           (time.monotonic() - self.last_failure_time) >= self.recovery_timeout:
            self.state = CircuitState.HALF_OPEN
            self.failure_count = 0
            logger.warning("[RECOVERY] %s half-open, probing", self.name)
        else:
            raise CircuitBreakerOpenError(
                f"{self.name} circuit is OPEN after {self.failure_threshold} consecutive failures; "
                f"retry after {self.recovery_timeout} seconds."
            )

    def _on_success(self) -> None:
        if self.state == CircuitState.HALF_OPEN:
            self.state = CircuitState.CLOSED
        self.failure_count = 0

    def _on_failure(self) -> None:
        self.failure_count += 1
        self.last_failure_time = time.monotonic()
        if self.state == CircuitState.HALF_OPEN or self.failure_count >= self.failure_threshold:
            if self.state != CircuitState.OPEN:
                logger.warning("[ERROR] %s circuit opened after %d failures", self.name, self.failure_count)
            self.state = CircuitState.OPEN

    async def call_async(self, func: Callable, *args, **kwargs) -> Any:
        """
        Execute async function with circuit breaker protection.

        Raises:
            CircuitBreakerOpenError: If circuit is open
            Exception: Original exception if function fails
        """
        self._before_call()
        try:
            result = await func(*args, **kwargs)
        except self.expected_exception:
            self._on_failure()
            raise
        self._on_success()
        return result


def retry_with_backoff(
    max_attempts: int = 3,
    initial_delay: float = 1.0,
    max_delay: float = 10.0,
    exponential_base: float = 2.0,
    retry_on: tuple = (Exception,),
    retry_if: Optional[Callable[[Exception], bool]] = None,
):
    """
    Decorator for async retry logic with exponential backoff.

    Args:
        max_attempts: Maximum number of attempts (1 disables retrying)
        initial_delay: Initial delay in seconds
        max_delay: Maximum delay in seconds
        exponential_base: Base for exponential backoff
        retry_on: Tuple of exception types to retry on
        retry_if: Optional predicate; an exception is retried only if it returns True
    """
    def decorator(func: Callable) -> Callable:
        name = getattr(func, "__qualname__", repr(func))

        @wraps(func)
        async def async_wrapper(*args, **kwargs) -> Any:
            for attempt in range(max_attempts):
                try:
                    return await func(*args, **kwargs)
                except retry_on as e:
                    if attempt == max_attempts - 1 or (retry_if is not None and not retry_if(e)):
                        raise
                    delay = min(initial_delay * (exponential_base ** attempt), max_delay)
                    logger.warning(
                        "[RETRY] Attempt %d/%d for %s: %s", attempt + 1, max_attempts, name, e
                    )
                    await asyncio.sleep(delay)

        return async_wrapper

    return decorator
