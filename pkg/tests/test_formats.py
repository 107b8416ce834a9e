"""Tests for format tables and atomic writes."""
import pytest

from proxdyn_helper.core.formats import (
    atomic_write,
    format_from_path,
    get_alternative_extensions,
    get_file_extension,
    is_supported_format,
)


class TestFormatTables:

    @pytest.mark.parametrize("name, expected", [
        ("run.json", "json"),
        ("run.yaml", "yaml"),
        ("run.yml", "yaml"),
        ("RUN.YML", "yaml"),
        ("notes.md", "md"),
    ])
    def test_format_from_path(self, name, expected):
        assert format_from_path(name) == expected

    def test_unknown_extension(self):
        with pytest.raises(ValueError, match="Unsupported file extension"):
            format_from_path("run.toml")

    def test_extensions(self):
        assert get_file_extension("yaml") == ".yaml"
        assert get_alternative_extensions("yaml") == [".yml"]
        assert get_alternative_extensions("json") == []
        with pytest.raises(ValueError):
            get_file_extension("csv")

    def test_supported(self):
        assert is_supported_format("md")
        assert not is_supported_format("svg")


class TestAtomicWrite:

    def test_text_and_bytes(self, tmp_path):
        atomic_write(tmp_path / "a.txt", "line\n")
        atomic_write(tmp_path / "b.bin", b"\x00\x01")
        assert (tmp_path / "a.txt").read_bytes() == b"line\n"
        assert (tmp_path / "b.bin").read_bytes() == b"\x00\x01"

    def test_replaces_existing_file(self, tmp_path):
        target = tmp_path / "a.txt"
        target.write_text("old")
        atomic_write(target, "new")
        assert target.read_text() == "new"
        assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]

    def test_failure_keeps_previous_content(self, tmp_path, mocker):
        target = tmp_path / "a.txt"
        target.write_text("old")
        mocker.patch("proxdyn_helper.core.formats.os.replace", side_effect=OSError("disk full"))
        with pytest.raises(OSError):
            atomic_write(target, "new")
        assert target.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
