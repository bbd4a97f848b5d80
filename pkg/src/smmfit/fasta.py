"""FASTA and plain token-file reading and writing.

FASTA: '>' header lines start a record; sequence lines are concatenated,
whitespace-stripped, and upper-cased.  Token files hold one sequence per
line; a line containing whitespace is split into multi-character tokens,
otherwise every character is one token.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union

from .errors import MalformedFasta

PathLike = Union[str, Path]


def parse_fasta(path: PathLike) -> list[tuple[str, str]]:
    """Read (id, sequence) records.

    Raises
    ------
    MalformedFasta
        On an empty file, sequence data before the first header, an empty
        header id, or a record with no sequence.
    """
    records: list[tuple[str, str]] = []
    header: str | None = None
    header_line = 0
    chunks: list[str] = []

    def flush():
        if header is not None:
            if not chunks:
                raise MalformedFasta(header_line, f"record {header!r} has no sequence")
            records.append((header, "".join(chunks)))

    with open(path, "r", encoding="utf-8") as fh:
        lineno = 0
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(">"):
                flush()
                header = line[1:].strip()
                if not header:
                    raise MalformedFasta(lineno, "empty header id")
                header_line = lineno
                chunks = []
            else:
                if header is None:
                    raise MalformedFasta(lineno, "sequence data before any header")
                chunks.append("".join(line.split()).upper())
    flush()
    if not records:
        raise MalformedFasta(0, "no records found")
    return records


def write_fasta(path: PathLike, records: Sequence[tuple[str, str]], width: int = 60) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, seq in records:
            fh.write(f">{name}\n")
            for i in range(0, len(seq), width):
                fh.write(seq[i : i + width] + "\n")


def read_token_lines(path: PathLike) -> list[list[str]]:
    """One token sequence per nonempty line; whitespace splits multi-char
    tokens, otherwise characters are the tokens."""
    seqs: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            seqs.append(parts if len(parts) > 1 else list(line))
    return seqs


def write_token_lines(path: PathLike, seqs: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in seqs:
            sep = " " if any(len(tok) > 1 for tok in seq) else ""
            fh.write(sep.join(seq) + "\n")
