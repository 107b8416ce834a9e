"""Shared constants and mappings for configuration and record file formats.

Config documents and solver records are read and written in the same three
formats; outputs that are not documents (CSV, SVG) have fixed extensions.
"""

import os
import tempfile
from pathlib import Path
from typing import Dict, List

# Supported document formats
SUPPORTED_FORMATS: List[str] = ["json", "yaml", "md"]

# File extension mappings (for writing records)
EXTENSION_MAP: Dict[str, str] = {
    "json": ".json",
    "yaml": ".yaml",
    "md": ".md",
}

# Additional extensions accepted on read
ALTERNATIVE_EXTENSIONS: Dict[str, List[str]] = {
    "yaml": [".yml"],
}

TRAJECTORY_EXTENSION = ".csv"
FIGURE_EXTENSION = ".svg"


def get_file_extension(format: str) -> str:
    """Get the file extension for the given document format.

    Raises:
        ValueError: If format is not supported
    """
    if format not in SUPPORTED_FORMATS:
        raise ValueError(f"Unsupported format '{format}'. Supported formats: {SUPPORTED_FORMATS}")
    return EXTENSION_MAP[format]


def get_alternative_extensions(format: str) -> List[str]:
    return ALTERNATIVE_EXTENSIONS.get(format, [])


def is_supported_format(format: str) -> bool:
    return format in SUPPORTED_FORMATS


def format_from_path(path) -> str:
    """Document format implied by a file's extension (case-insensitive).

    Raises:
        ValueError: If the extension belongs to no supported format
    """
    suffix = Path(path).suffix.lower()
    for format in SUPPORTED_FORMATS:
        if suffix == EXTENSION_MAP[format] or suffix in get_alternative_extensions(format):
            return format
    raise ValueError(f"Unsupported file extension '{suffix}'. Supported formats: {SUPPORTED_FORMATS}")


def atomic_write(path, data: str | bytes) -> Path:
    """Write `data` to a temporary sibling of `path`, then move it into place.

    A failure at any point leaves `path` untouched and removes the temporary file.
    """
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    encoding = None if isinstance(data, bytes) else "utf-8"
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, mode, encoding=encoding, newline="" if encoding else None) as f:
            f.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
