from contextlib import contextmanager
import os
import shutil
from tempfile import mkdtemp
from typing import Optional


@contextmanager
def temporary_directory(parent: Optional[str] = None):
    """
    Context manager for creating and automatically cleaning up a temporary
    directory.

    The directory is removed when the block exits, whether it exits normally
    or raises. Creating it inside `parent` keeps a later `os.replace` of a
    staged file on the same filesystem.

    Args:
        parent (str, optional): Directory to create the temporary directory in.
            Defaults to the system temporary location.

    Yields:
        str: The path to the temporary directory.
    """
    temp_dir = mkdtemp(dir=parent)
    try:
        yield temp_dir
    finally:
        shutil.rmtree(temp_dir, ignore_errors=True)


def get_files(directory_path, file_extension=None, return_full_path=False):
    """
    Retrieves a list of files from the specified directory, optionally filtering by
    file extension.

    Args:
        directory_path (str): The path of the directory to scan for files.
        file_extension (str or tuple of str, optional): If specified, only files
            ending with this extension (or one of these extensions) are kept.
            Defaults to None, which includes all files.
        return_full_path (bool, optional): If True, each item in the list is the
            full path to a file; otherwise only the file names are returned.

    Returns:
        list of str: File names or full paths, in directory listing order.
    """
    files = []
    for file in os.listdir(directory_path):
        full_path = os.path.join(directory_path, file)
        if os.path.isfile(full_path) and (
            file_extension is None or file.endswith(file_extension)
        ):
            files.append(full_path if return_full_path else file)
    return files


def resolve_output_dir(configured: str, run_name: str) -> str:
    """
    Returns `configured` when set; otherwise `<POINTCLS_OUTPUT_ROOT>/<run_name>`,
    falling back to `./runs/<run_name>`.
    """
    if configured:
        return configured
    root = os.environ.get("POINTCLS_OUTPUT_ROOT") or os.path.join(os.getcwd(), "runs")
    return os.path.join(root, run_name)
