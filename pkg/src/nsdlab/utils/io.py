"""File I/O utilities."""

from pathlib import Path

from nsdlab.core.exceptions import FileOperationError


def read_bytes(file_path: str | Path) -> bytes:
    """Read a whole binary file.

    Args:
        file_path: Path to file

    Returns:
        File content

    Raises:
        FileOperationError: If reading fails
    """
    try:
        return Path(file_path).read_bytes()
    except Exception as e:
        msg = f"Failed to read file {file_path}: {e}"
        raise FileOperationError(msg) from e


def write_bytes(file_path: str | Path, content: bytes) -> None:
    """Write a binary file, creating parent directories.

    Raises:
        FileOperationError: If writing fails
    """
    try:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(content)
    except Exception as e:
        msg = f"Failed to write file {file_path}: {e}"
        raise FileOperationError(msg) from e


def write_text(file_path: str | Path, content: str) -> None:
    """Write a UTF-8 text file, creating parent directories.

    Raises:
        FileOperationError: If writing fails
    """
    write_bytes(file_path, content.encode("utf-8"))


def append_line(file_path: str | Path, line: str) -> None:
    """Append one line to a text file.

    Raises:
        FileOperationError: If writing fails
    """
    try:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as handle:
            handle.write(line.rstrip("\n") + "\n")
    except Exception as e:
        msg = f"Failed to append to {file_path}: {e}"
        raise FileOperationError(msg) from e


def truncate_lines(file_path: str | Path, keep: int) -> int:
    """Keep only the first ``keep`` lines of a text file.

    Returns:
        Number of lines dropped (0 when the file is missing)
    """
    path = Path(file_path)
    if not path.exists():
        return 0
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
        path.write_text("".join(line + "\n" for line in lines[:keep]), encoding="utf-8")
    except Exception as e:
        msg = f"Failed to truncate {file_path}: {e}"
        raise FileOperationError(msg) from e
    return max(0, len(lines) - keep)
