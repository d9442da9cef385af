# src/pipelines/tools/executor.py
"""
Concurrent execution of independent replicate tasks.
"""

import asyncio
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

T = TypeVar('T')


async def run_tasks(tasks: Sequence[Callable[[], T]], jobs: int = 1) -> List[T]:
    """
    Run independent tasks on a thread pool of `jobs` workers.

    Results come back in submission order, so the output does not depend
    on `jobs`. The first failing task's exception is re-raised.
    """
    if not tasks:
        return []
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as executor:
        futures = [loop.run_in_executor(executor, task) for task in tasks]
        return list(await asyncio.gather(*futures))
