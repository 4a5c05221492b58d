import asyncio
import functools
import logging
from concurrent.futures import BrokenExecutor, ThreadPoolExecutor
from types import TracebackType
from typing import Any, Callable, Iterable, List, Optional, Type, TypeVar

from weakvalue.config import Config
from weakvalue.errors import WeakValueExecutionError

logger = logging.getLogger(__name__)

T = TypeVar("T")


class Executor:
    def __init__(self, config: Config) -> None:
        self.config = config
        self.pool: Optional[ThreadPoolExecutor] = None

    async def run(self, func: Callable[..., T], *args: Any, **kwargs: Any) -> T:
        if self.pool is None:
            self.pool = ThreadPoolExecutor(
                max_workers=self.config.max_workers,
                thread_name_prefix="weakvalue",
            )
            logger.debug("started worker pool (max_workers=%s)", self.config.max_workers)
        loop = asyncio.get_running_loop()
        try:
            return await loop.run_in_executor(self.pool, functools.partial(func, *args, **kwargs))
        except BrokenExecutor as err:
            raise WeakValueExecutionError(str(err)) from err

    async def map(self, func: Callable[..., T], *iterables: Iterable[Any]) -> List[T]:
        """Run func over zipped arguments concurrently; results keep input order."""
        return list(await asyncio.gather(*(self.run(func, *args) for args in zip(*iterables))))

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown(wait=True)
            self.pool = None

    async def __aenter__(self) -> "Executor":
        return self

    async def __aexit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        self.close()
