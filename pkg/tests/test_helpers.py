"""
Tests for seeds, number formatting, list parsing and the writers.
"""

import csv
import io
import json
import math

import numpy as np
import pytest

from src.utils.helpers import (
    config_header_lines,
    fmt,
    hash64,
    mean_and_stderr,
    parse_float_list,
    parse_int_list,
    write_csv,
    write_json,
)


def test_hash64_is_stable_and_spread():
    assert hash64(1, 0) == hash64(1, 0)
    seeds = {hash64(20240601, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)
    assert hash64(1, 0) != hash64(2, 0)


def test_fmt():
    assert fmt(0.1) == '0.10000000000000001'
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(np.float64(2.5)) == '2.5'
    assert fmt(np.int64(7)) == '7'
    assert fmt(float('nan')) == 'nan'
    assert fmt(-math.inf) == '-inf'
    assert fmt(True) == 'true'
    assert fmt(None) == ''


def test_parse_lists():
    assert parse_float_list("0,1,5") == [0.0, 1.0, 5.0]
    grid = parse_float_list("0.5:2.5:5")
    assert grid == pytest.approx([0.5, 1.0, 1.5, 2.0, 2.5])
    assert parse_float_list("3:9:1") == [3.0]
    assert parse_int_list("4, 8") == [4, 8]
    for bad in ("", "1:2", "1:2:0", "a,b"):
        with pytest.raises(ValueError):
            parse_float_list(bad)
    with pytest.raises(ValueError):
        parse_int_list(",")


def test_mean_and_stderr():
    assert mean_and_stderr([0.1] * 7) == (0.1, 0.0)
    mean, stderr = mean_and_stderr([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5
    assert stderr == pytest.approx(math.sqrt(5 / 3 / 4))
    assert all(math.isnan(v) for v in mean_and_stderr([]))
    assert mean_and_stderr([2.5]) == (2.5, 0.0)
    mean, stderr = mean_and_stderr(np.array([0.0, 10.0]))
    assert (mean, stderr) == (5.0, pytest.approx(5.0))


def test_csv_writer():
    buffer = io.StringIO()
    count = write_csv(buffer, ('a', 'b'), [(1, 0.5), (2, float('nan'))], {'k': 3, 'grid': [1.0, 2.0]})
    assert count == 2
    assert buffer.getvalue() == "# grid=1,2\n# k=3\na,b\n1,0.5\n2,nan\n"
    assert config_header_lines({'b': None}) == ['# b=']


def test_csv_fields_with_commas_stay_whole():
    buffer = io.StringIO()
    key = repr((3, ((0, 1, 2),)))
    write_csv(buffer, ('canonical_form', 'vertex_count'), [(key, 3)], {'mode': 'projected'})
    lines = [line for line in buffer.getvalue().splitlines() if not line.startswith('#')]
    rows = list(csv.reader(lines))
    assert rows == [['canonical_form', 'vertex_count'], [key, '3']]


def test_json_writer():
    buffer = io.StringIO()
    write_json(buffer, {'values': np.array([1.5, 2.0]), 'count': np.int64(3), 'inf': math.inf},
               {'seed': 1})
    document = json.loads(buffer.getvalue())
    assert document == {'schema': 1, 'config': {'seed': 1}, 'values': [1.5, 2.0], 'count': 3, 'inf': 'inf'}
