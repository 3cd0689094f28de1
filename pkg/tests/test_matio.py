import numpy as np
import pytest

from facecov.errors import InputError
from facecov.matio import (read_csv_matrix, read_matrix, read_packed_matrix,
                           sniff_format, write_csv_matrix, write_matrix,
                           write_packed_matrix)


class TestCsv:
    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        y = rng.standard_normal((7, 3)) * 1e3
        y[0, 0] = 1e-300
        y[2, 1] = np.nan
        path = tmp_path / "y.csv"
        write_csv_matrix(path, y)
        back = read_csv_matrix(path)
        assert back.shape == y.shape
        nan = np.isnan(y)
        assert np.array_equal(np.isnan(back), nan)
        assert np.array_equal(back[~nan], y[~nan])
        assert ",NA," in path.read_text() or ",NA\n" in path.read_text()

    def test_missing_tokens_parsed_as_nan(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("1.0,,2.0\nna,NaN,NA\n3,4,5e-1\n")
        y = read_csv_matrix(path)
        assert np.isnan(y[0, 1]) and np.isnan(y[1]).all()
        assert y[2, 2] == 0.5

    def test_header_skipped_on_request(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("t1,t2\n1,2\n3,4\n")
        with pytest.raises(InputError, match="line 1, column 1"):
            read_csv_matrix(path)
        y = read_csv_matrix(path, skip_header=True)
        assert np.array_equal(y, [[1.0, 2.0], [3.0, 4.0]])

    def test_ragged_rows_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(InputError, match="line 2"):
            read_csv_matrix(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("")
        with pytest.raises(InputError, match="no data rows"):
            read_csv_matrix(path)

    def test_single_column_shape(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("1\n2\n3\n")
        assert read_csv_matrix(path).shape == (3, 1)

    def test_writer_requires_matrix(self, tmp_path):
        with pytest.raises(InputError):
            write_csv_matrix(tmp_path / "y.csv", np.zeros(4))


class TestPacked:
    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        y = rng.standard_normal((9, 4))
        y[3, 2] = np.nan
        path = tmp_path / "y.bin"
        write_packed_matrix(path, y)
        back = read_packed_matrix(path)
        assert back.dtype == np.float64 and back.shape == (9, 4)
        assert np.array_equal(y.view(np.uint64), back.view(np.uint64))

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "y.bin"
        path.write_bytes(b"FACE")
        with pytest.raises(InputError, match="truncated"):
            read_packed_matrix(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "y.bin"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 16)
        with pytest.raises(InputError, match="bad magic"):
            read_packed_matrix(path)

    def test_payload_size_mismatch_rejected(self, tmp_path, rng):
        path = tmp_path / "y.bin"
        write_packed_matrix(path, rng.standard_normal((5, 2)))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(InputError, match="payload"):
            read_packed_matrix(path)


class TestDispatch:
    def test_sniffing_and_auto_read(self, tmp_path, rng):
        y = rng.standard_normal((6, 2))
        csv_path = tmp_path / "y.csv"
        bin_path = tmp_path / "y.bin"
        write_matrix(csv_path, y, fmt="csv")
        write_matrix(bin_path, y, fmt="packed")
        assert sniff_format(csv_path) == "csv"
        assert sniff_format(bin_path) == "packed"
        assert np.array_equal(read_matrix(csv_path), y)
        assert np.array_equal(read_matrix(bin_path), y)

    def test_explicit_format_override(self, tmp_path, rng):
        y = rng.standard_normal((3, 3))
        path = tmp_path / "data.dat"  # extension carries no meaning
        write_matrix(path, y, fmt="packed")
        assert np.array_equal(read_matrix(path, fmt="packed"), y)

    def test_unknown_formats_rejected(self, tmp_path):
        path = tmp_path / "y.csv"
        write_matrix(path, np.zeros((2, 2)))
        with pytest.raises(InputError, match="unknown format"):
            read_matrix(path, fmt="parquet")
        with pytest.raises(InputError, match="unknown format"):
            write_matrix(path, np.zeros((2, 2)), fmt="parquet")
