from contextlib import contextmanager
from io import StringIO
import logging
import math
import os
import sys


class StreamNonTTY(StringIO):
    def isatty(self):
        return False


@contextmanager
def environ(name, value):
    orig = os.environ.get(name)
    os.environ[name] = value
    try:
        yield
    finally:
        if orig is None:
            del os.environ[name]
        else:
            os.environ[name] = orig


@contextmanager
def replace_by(stream):
    orig_stdout = sys.stdout
    orig_stderr = sys.stderr
    sys.stdout = stream
    sys.stderr = stream
    try:
        yield
    finally:
        sys.stdout = orig_stdout
        sys.stderr = orig_stderr


@contextmanager
def captured_log(level=logging.INFO):
    """Routes the `twostage` logger into a StringIO for the duration of the block."""
    root = logging.getLogger("twostage")
    stream = StreamNonTTY()
    handlers = root.handlers[:]
    orig_level = root.level
    for handler in handlers:
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    if handlers:
        handler.setFormatter(handlers[0].formatter)
    root.addHandler(handler)
    root.setLevel(level)
    try:
        yield stream
    finally:
        root.removeHandler(handler)
        for h in handlers:
            root.addHandler(h)
        root.setLevel(orig_level)


def assertWithinSE(test, value, expected, se, k=3.0, floor=1e-12):
    """Fails `test` unless |value - expected| <= k * se (with a tiny floor for zero-variance cases)."""
    test.assertLessEqual(
        abs(value - expected), k * se + floor,
        f"{value} differs from {expected} by more than {k} standard errors ({se})",
    )


def combined_se(*errors):
    return math.sqrt(sum(e * e for e in errors))
