"""Cache, checksum, and failure behavior of the artifact fetcher.

Download paths use file:// URLs so the tests are deterministic with or
without network access.
"""

from pathlib import Path

import pytest

from bundleconvert.fetch import ensure_artifact, sha256_of
from bundleconvert.graph import ConvertError
from bundleconvert.registry import Artifact


def file_url(path: Path) -> str:
    return path.resolve().as_uri()


def test_cached_file_is_not_refetched(tmp_path):
    cache = tmp_path / "cache"
    cache.mkdir()
    (cache / "data.bin").write_bytes(b"cached")
    # dead URL: must never be touched because the file is already cached
    art = Artifact("data.bin", file_url(tmp_path / "missing.bin"))
    assert ensure_artifact(cache, art).read_bytes() == b"cached"


def test_fetch_via_file_url(tmp_path):
    src = tmp_path / "src.bin"
    src.write_bytes(b"payload")
    cache = tmp_path / "cache"
    art = Artifact("fetched.bin", file_url(src))
    dest = ensure_artifact(cache, art)
    assert dest.read_bytes() == b"payload"
    assert not list(cache.glob("*.part"))


def test_fetch_failure_is_clean(tmp_path):
    art = Artifact("gone.bin", file_url(tmp_path / "does-not-exist"))
    with pytest.raises(ConvertError, match="download failed"):
        ensure_artifact(tmp_path / "cache", art)
    assert not (tmp_path / "cache" / "gone.bin").exists()


def test_checksum_verified_and_mismatch_rejected(tmp_path):
    src = tmp_path / "src.bin"
    src.write_bytes(b"checked")
    good = Artifact("ok.bin", file_url(src), sha256=sha256_of(src))
    assert ensure_artifact(tmp_path / "cache", good).exists()
    bad = Artifact("bad.bin", file_url(src), sha256="0" * 64)
    with pytest.raises(ConvertError, match="checksum mismatch"):
        ensure_artifact(tmp_path / "cache", bad)
