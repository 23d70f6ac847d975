"""Small I/O helpers: path-or-stream opening and atomic file writes."""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, Union

TextSource = Union[str, Path, IO[str]]


@contextmanager
def open_text(source: TextSource) -> Iterator[IO[str]]:
    """Yield a readable text stream; opens `source` if it is a path."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as f:
            yield f
    else:
        yield source


@contextmanager
def open_write(dest: TextSource) -> Iterator[IO[str]]:
    """Yield a writable text stream.

    When `dest` is a path the content goes to a temp file in the same
    directory and is renamed into place on success, so readers never see a
    partial file and failed runs leave the old file untouched.
    """
    if isinstance(dest, (str, Path)):
        dest = Path(dest)
        fd, tmp_name = tempfile.mkstemp(
            dir=dest.parent or Path("."), prefix=f".{dest.name}.", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                yield f
            os.replace(tmp_name, dest)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
    else:
        yield dest


def write_json(dest: TextSource, obj: object) -> None:
    """Serialize `obj` as indented JSON (atomically when `dest` is a path)."""
    with open_write(dest) as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
