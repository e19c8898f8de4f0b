import json

import numpy as np
import pytest

from fgforge.io import (CoefficientFileError, decode_array, dumps, loads, read_coefficients,
                        write_coefficients)


def test_round_trip_is_bit_exact(random_expansion, tmp_path):
    path = tmp_path / "c.json"
    write_coefficients(path, random_expansion, {"note": "x"})
    exp, meta = read_coefficients(path)
    assert meta == {"note": "x"}
    assert exp.order == random_expansion.order and exp.signature == 1
    for a, b in zip(exp.coeffs, random_expansion.coeffs):
        assert np.array_equal(a.comps, b.comps)


def test_dumps_is_deterministic(ads_expansion):
    assert dumps(ads_expansion, {"a": 1}) == dumps(ads_expansion, {"a": 1})


def test_mode_summary(ads_expansion):
    doc = json.loads(dumps(ads_expansion))
    modes = doc["coefficients"][3]["modes"]["11"]
    assert modes[0]["wavevector"] == [0, 0, 0]
    assert modes[0]["amplitude_cos"] == pytest.approx(-2.0 / 3.0)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other"),
    lambda d: d.update(version=99),
    lambda d: d["coefficients"].pop(),
    lambda d: d["coefficients"][0]["components"].pop("11"),
    lambda d: d["coefficients"][0]["components"].update({"11": "zz"}),
    lambda d: d["coefficients"][0]["components"].update({"11": "00"}),
    lambda d: d.update(signature=3),
    lambda d: d["grid"].update(n_points=12),
])
def test_malformed_files(ads_expansion, mutate):
    doc = json.loads(dumps(ads_expansion))
    mutate(doc)
    with pytest.raises(CoefficientFileError):
        loads(json.dumps(doc))


def test_not_json():
    with pytest.raises(CoefficientFileError):
        loads("{not json")


def test_missing_file(tmp_path):
    with pytest.raises(CoefficientFileError):
        read_coefficients(tmp_path / "absent.json")


def test_decode_length_check():
    with pytest.raises(CoefficientFileError):
        decode_array("00" * 8, (2,))
