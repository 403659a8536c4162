"""Small shared output helpers: 12-significant-digit CSV fields, JSON sidecars."""

from __future__ import annotations

import json
import os


def fmt12(x) -> str:
    """Format a float with 12 significant digits, '.' decimal separator."""
    return f"{float(x):.12g}"


def write_csv_rows(path, header, rows) -> None:
    """RFC-4180 CSV: CRLF line endings, no quoting needed for numeric data."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\r\n")


def sidecar_path(out_path) -> str:
    return str(out_path) + ".config.json"


def write_json_sidecar(out_path, config: dict, version: str) -> str:
    """Record the fully resolved run configuration next to an output file."""
    payload = {"skewspec_version": version, "config": config}
    path = sidecar_path(out_path)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def resolve_threads(cli_value: int | None) -> int:
    """SKEWSPEC_THREADS overrides the command-line value; default 1."""
    env = os.environ.get("SKEWSPEC_THREADS")
    if env is not None:
        n = int(env)
        if n < 1:
            raise ValueError("SKEWSPEC_THREADS must be >= 1")
        return n
    if cli_value is None:
        return 1
    if cli_value < 1:
        raise ValueError("--threads must be >= 1")
    return cli_value
