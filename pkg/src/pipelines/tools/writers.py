# src/pipelines/tools/writers.py
"""
Atomic persistence of experiment results.

Every file is written to a temporary sibling, flushed, fsynced and renamed
over the destination, so a crash never leaves a partially written result.
"""

import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Callable, Optional, Type, TypeVar, Union

import pandas as pd
from pydantic import BaseModel, ValidationError as PydanticValidationError

from core.constants import CSV_COLUMNS, TIMESTAMP_FORMAT
from core.exceptions import InvalidInputError, PersistenceError
from core.logging import log_with_timestamp

M = TypeVar('M', bound=BaseModel)


def output_name(name: str, suffix: str, deterministic: bool = False,
                now: Optional[datetime] = None) -> str:
    """
    `<name>.<UTC timestamp>.<suffix>`, or `<name>.<suffix>` in deterministic mode.

    Example:
        >>> output_name('rate_d1', 'csv', deterministic=True)
        'rate_d1.csv'
    """
    if deterministic:
        return f"{name}.{suffix}"
    stamp = (now or datetime.now(timezone.utc)).strftime(TIMESTAMP_FORMAT)
    return f"{name}.{stamp}.{suffix}"


def atomic_write(path: Union[str, Path], write: Callable[[BinaryIO], None]) -> Path:
    """
    Run `write` against a temporary file and rename it onto `path`.

    Raises:
        PersistenceError: on any failure; the temporary file is removed and
            an existing file at `path` is left untouched
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise PersistenceError(f"Cannot create directory {path.parent}: {e}", {'path': str(path)})

    handle = tempfile.NamedTemporaryFile(
        mode='wb', dir=path.parent, prefix=f".{path.name}.", suffix='.tmp', delete=False
    )
    temp_path = Path(handle.name)
    try:
        with handle:
            write(handle)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(temp_path, path)
    except Exception as e:
        try:
            temp_path.unlink()
        except FileNotFoundError:
            pass
        log_with_timestamp(f"Write to {path} failed: {e}", "Writer", "error")
        raise PersistenceError(f"Failed to write {path}: {e}", {'path': str(path)}) from e
    return path


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> Path:
    return atomic_write(path, lambda handle: handle.write(payload))


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode('utf-8'))


def write_records_csv(path: Union[str, Path], records: pd.DataFrame) -> Path:
    """Replicate table in the fixed column order, '\\n' line endings."""
    missing = [column for column in CSV_COLUMNS if column not in records.columns]
    if missing:
        raise InvalidInputError(f"Replicate table is missing columns: {missing}", {'missing': missing})
    ordered = records[CSV_COLUMNS].sort_values(['n', 'replicate'], kind='stable')
    return atomic_write_text(path, ordered.to_csv(index=False, lineterminator='\n'))


def model_json(model: BaseModel) -> str:
    """Sorted keys, two-space indent, trailing newline."""
    return json.dumps(model.model_dump(mode='json'), sort_keys=True, indent=2) + '\n'


def write_json_model(path: Union[str, Path], model: BaseModel) -> Path:
    return atomic_write_text(path, model_json(model))


def read_json_model(path: Union[str, Path], model: Type[M]) -> M:
    """
    Load a JSON report written by write_json_model.

    Raises:
        InvalidInputError: missing file, malformed JSON or a schema mismatch
    """
    path = Path(path)
    try:
        return model.model_validate_json(path.read_bytes())
    except FileNotFoundError:
        raise InvalidInputError(f"Input file not found: {path}", {'path': str(path)})
    except PydanticValidationError as e:
        raise InvalidInputError(
            f"{path} is not a valid {model.__name__}",
            {'path': str(path), 'errors': e.errors(include_url=False, include_input=False)}
        )
