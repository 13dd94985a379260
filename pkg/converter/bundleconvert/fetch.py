"""Artifact download and cache handling."""

from __future__ import annotations

import hashlib
import shutil
import urllib.error
import urllib.request
from pathlib import Path

from .graph import ConvertError
from .registry import Artifact

DOWNLOAD_TIMEOUT = 60.0


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def ensure_artifact(cache_dir: Path, art: Artifact) -> Path:
    """Return the local path of an artifact, downloading on a cache miss.

    Downloads go to a .part file first so an interrupted transfer never
    masquerades as a cached artifact.  A pinned sha256 is verified on both
    cached and fresh copies.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    dest = cache_dir / art.filename
    if not dest.exists():
        part = dest.with_suffix(dest.suffix + ".part")
        try:
            with urllib.request.urlopen(art.url,
                                        timeout=DOWNLOAD_TIMEOUT) as resp, \
                    open(part, "wb") as out:
                shutil.copyfileobj(resp, out)
        except (urllib.error.URLError, OSError, ValueError) as exc:
            part.unlink(missing_ok=True)
            raise ConvertError(
                f"download failed for {art.url}: {exc}; place the file at "
                f"{dest} manually (--cache-dir) to convert offline") from exc
        part.rename(dest)
    if art.sha256 is not None:
        digest = sha256_of(dest)
        if digest != art.sha256:
            raise ConvertError(
                f"checksum mismatch for {dest.name}: expected "
                f"{art.sha256}, got {digest}")
    return dest
