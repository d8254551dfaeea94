import json
import math
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

CSV_FLOAT_FORMAT = "%.17g"

def validate_file(file_path: str | Path) -> None:
    """Verify that a file exists."""
    if not os.path.isfile(file_path):
        raise FileNotFoundError(f"File not found: {file_path}")

def ensure_dir(directory: str | Path) -> Path:
    """Create a directory (and parents) if needed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory

def derive_seed(*entropy: int) -> int:
    """Derive a 63-bit seed from integer entropy, stable across platforms."""
    state = np.random.SeedSequence([int(e) for e in entropy]).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))

def make_rng(seed: int) -> np.random.Generator:
    """Return the project's pseudorandom generator (PCG64) for a seed."""
    return np.random.Generator(np.random.PCG64(seed))

def to_jsonable(value: Any) -> Any:
    """Convert numpy values and non-finite floats into plain JSON values."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return value.as_posix()
    return value

def write_json(path: str | Path, data: Any) -> Path:
    """Write a JSON document deterministically."""
    path = Path(path)
    ensure_dir(path.parent)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True, allow_nan=False)
        f.write('\n')
    return path

def read_json(path: str | Path) -> Any:
    """Read a JSON document."""
    validate_file(path)
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)

def write_csv(path: str | Path, rows: Iterable[Mapping[str, Any]] | pd.DataFrame,
              columns: Sequence[str] | None = None) -> Path:
    """Write records as a CSV file with a header row."""
    path = Path(path)
    ensure_dir(path.parent)
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n', encoding='utf-8')
    return path
