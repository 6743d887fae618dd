"""Report emission: schema-stable CSV tables, JSON summaries and run manifests"""

import csv
import hashlib
import json
import math
import multiprocessing
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Sequence, Union

import numpy as np

from utils.logger import IsingLabLogger

PACKAGE_VERSION = "0.3.0"
SOURCE_PACKAGES = ("utils", "grassmann", "lattice", "free_fermion", "polymer", "scaling", "rg")

logger = IsingLabLogger("isinglab.reporting")


def _plain(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    return value


def format_cell(value: Any) -> str:
    """Render a CSV cell; floats use repr so identical runs give identical bytes."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV table with a fixed header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(list(header))
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row width {len(row)} does not match header width {len(header)} in {path.name}")
            writer.writerow([format_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def write_json(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    """Write a JSON document with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(_plain(payload), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def source_stamp(root: Union[str, Path, None] = None) -> str:
    """Hash of the package sources, used as a describe-style version stamp."""
    root = Path(root) if root else Path(__file__).resolve().parent.parent
    digest = hashlib.sha256()
    for package in SOURCE_PACKAGES:
        for file in sorted((root / package).rglob("*.py")):
            digest.update(str(file.relative_to(root)).encode())
            digest.update(file.read_bytes())
    return f"v{PACKAGE_VERSION}-{digest.hexdigest()[:12]}"


def write_manifest(out_dir: Union[str, Path], command: str, config: Dict[str, Any], seed: int) -> Path:
    """Echo the resolved configuration with seed and version stamp."""
    return write_json(Path(out_dir) / "manifest.json", {
        "command": command,
        "seed": seed,
        "version": source_stamp(),
        "config": config,
    })


def compensated_sum(values: Iterable[Union[float, complex]]) -> Union[float, complex]:
    """Exactly rounded sum of real or complex values."""
    values = list(values)
    if any(isinstance(v, (complex, np.complexfloating)) for v in values):
        return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))
    return math.fsum(values)


def parallel_map(func: Callable, items: List[Any], threads: int = 1) -> List[Any]:
    """Ordered map over a process pool; threads == 1 runs in-process."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with multiprocessing.Pool(processes=min(threads, len(items))) as pool:
        return pool.map(func, items)
