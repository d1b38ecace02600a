import functools
import time

from loguru import logger


def timing_decorator(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        end_time = time.perf_counter()
        logger.debug(f'{func.__name__} took {end_time - start_time:.4f} seconds')
        return result

    return wrapper
