import pytest

from extremescore.errors import DuplicateRowError, MissingYearError, ParseError
from extremescore.series import (
    StationSeries,
    join_covariate,
    load_covariate_csv,
    load_station_csv,
    write_station_csv,
)


def test_load_groups_and_sorts(write_file):
    path = write_file(
        "st.csv",
        "station_id,year,value\nB,2001,3.5\nA,2000,1.0\nA,1999,2.0\nB,2000,4.0\nB,2002,5.0\n",
    )
    load = load_station_csv(path, min_years=3)
    assert [s.station_id for s in load.series] == ["A", "B"]
    a = load.series[0]
    assert a.years == (1999, 2000)
    assert a.values == (2.0, 1.0)
    assert load.short_stations == ["A"]
    assert load.dropped_rows == 0


def test_blank_rows_are_dropped_and_counted(write_file):
    path = write_file("st.csv", "station_id,year,value\nA,2000,1.0\nA,2001,\n,2002,3.0\nA,2003,2.5\n")
    load = load_station_csv(path)
    assert load.dropped_rows == 2
    assert load.series[0].years == (2000, 2003)


def test_duplicate_station_year(write_file):
    path = write_file("st.csv", "station_id,year,value\nA,2000,1.0\nA,2000,2.0\n")
    with pytest.raises(DuplicateRowError, match="line 2"):
        load_station_csv(path)


@pytest.mark.parametrize(
    "text",
    [
        "station,year,value\nA,2000,1.0\n",
        "station_id,year,value\nA,2000,abc\n",
        "station_id,year,value\nA,2000.5,1.0\n",
        "station_id,year,value\nA,2000,inf\n",
    ],
)
def test_malformed_files(write_file, text):
    with pytest.raises(ParseError):
        load_station_csv(write_file("bad.csv", text))


def test_inline_covariate_column(write_file):
    path = write_file("st.csv", "station_id,year,value,covariate\nA,2000,1.0,0.1\nA,2001,2.0,0.2\n")
    (s,) = load_station_csv(path).series
    assert s.covariate == (0.1, 0.2)


def test_join_covariate(write_file, make_series):
    cov = load_covariate_csv(write_file("cov.csv", "year,covariate\n1951,0.2\n1950,0.1\n1952,0.3\n"))
    assert list(cov) == [1950, 1951, 1952]
    (joined,) = join_covariate([make_series("A", [1.0, 2.0, 3.0])], cov)
    assert joined.covariate == (0.1, 0.2, 0.3)
    with pytest.raises(MissingYearError):
        join_covariate([make_series("A", [1.0, 2.0, 3.0, 4.0])], cov)


def test_write_then_load(tmp_path, make_series):
    original = [
        make_series("S2", [1.25, 3.0 / 7.0], covariate=[0.1, 0.2]),
        make_series("S1", [2.0, 1e-9, 5.5], start_year=1990, covariate=[0.0, 0.5, 1.0]),
    ]
    path = write_station_csv(original, tmp_path / "out.csv")
    back = load_station_csv(path).series
    assert back == sorted(original, key=lambda s: s.station_id)


def test_series_validation():
    with pytest.raises(ValueError):
        StationSeries(station_id="A", years=(2000, 2000), values=(1.0, 2.0))
    with pytest.raises(ValueError):
        StationSeries(station_id="A", years=(2000,), values=(1.0, 2.0))


def test_missing_file_is_not_a_parse_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_station_csv(tmp_path / "absent.csv")
