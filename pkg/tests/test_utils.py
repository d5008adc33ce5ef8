import json
import logging
import math

import dask
import numpy as np
import pytest

from qkt import utils


def test_to_python():
    payload = {
        "a": np.float64(1.5),
        "b": np.arange(3),
        "c": (np.int64(2), np.bool_(True)),
        3: [math.nan, np.inf],
    }
    converted = utils.to_python(payload)
    assert converted == {"a": 1.5, "b": [0, 1, 2], "c": [2, True], "3": [None, None]}
    json.dumps(converted, allow_nan=False)


def test_config_hash():
    a = utils.config_hash({"x": 1, "y": (1.0, 2.0)})
    b = utils.config_hash({"y": [1.0, 2.0], "x": 1})
    assert a == b
    assert len(a) == 16
    assert utils.config_hash({"x": 2, "y": (1.0, 2.0)}) != a


@pytest.mark.parametrize("raw,expected", [(None, None), ("", None), ("4", 4), ("0", 1), ("many", None)])
def test_worker_count(monkeypatch, raw, expected):
    if raw is None:
        monkeypatch.delenv("QKT_OE_THREADS", raising=False)
    else:
        monkeypatch.setenv("QKT_OE_THREADS", raw)
    assert utils.worker_count() == expected


def test_compute_ordered_keeps_order():
    tasks = [dask.delayed(lambda i: i * i)(i) for i in range(10)]
    assert utils.compute_ordered(tasks) == [i * i for i in range(10)]
    assert utils.compute_ordered([]) == []


def test_timer_logs(caplog):
    @utils.timer
    def work():
        return 42

    @utils.timer
    def broken():
        raise ValueError("nope")

    with caplog.at_level(logging.INFO, logger="qkt.utils"):
        assert work() == 42
        with pytest.raises(ValueError):
            broken()
    assert "'work' finished" in caplog.text
    assert "'broken' failed" in caplog.text
