#!/usr/bin/env python3
"""Tests for the run_capacity command line"""

import io
import json
import math
from pathlib import Path

import pandas as pd
import pytest

from config import Config, config
from run_capacity import (
    EXIT_INDETERMINATE,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    main,
    parse_family,
)
from sidecap.records import ChannelConfig, OutputRecord, number_token, schema_for

ROOT = Path(__file__).parent
WORKED = ["--p", "4", "--q1", "1", "--q2", "1", "--n", "2", "--rho-xs1", "0.5", "--rho-s2z", "0.5"]
UNIT = ["--p", "1", "--q1", "1", "--q2", "1", "--n", "1"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text) if text else None


def test_capacity_in_bits():
    code, record = run_json("capacity", "--p", "10", "--q1", "1", "--q2", "1", "--n", "1", "--unit", "bits")
    assert code == EXIT_OK
    assert record["unit"] == "bits"
    assert record["results"]["value"] == pytest.approx(1.7297, abs=1e-4)
    assert record["results"]["costa"] == pytest.approx(record["results"]["value"], abs=1e-12)


def test_capacity_from_config_file():
    code, record = run_json("capacity", "--config", str(ROOT / "data" / "channel_worked.json"))
    assert code == EXIT_OK
    assert record["unit"] == "nats"
    results = record["results"]
    assert results["value"] == pytest.approx(0.549306, abs=1e-6)
    assert results["achievability"] == pytest.approx(results["value"], abs=1e-9)
    assert results["converse"] == pytest.approx(results["value"], abs=1e-9)
    assert results["alpha_star"] == pytest.approx(1.0 / 3.0)
    assert results["alpha_printed"] == pytest.approx(1.0)
    assert results["rate_at_alpha_printed"] == pytest.approx(0.5 * math.log(25.5 / 10.5), abs=1e-12)


def test_config_overrides_win():
    code, record = run_json("capacity", "--config", str(ROOT / "data" / "channel_worked.json"), "--rho-s2z", "0")
    assert code == EXIT_OK
    assert record["inputs"]["rho_s2z"] == 0.0
    assert record["results"]["value"] == pytest.approx(0.5 * math.log1p(1.5), abs=1e-12)


def test_bits_and_nats_differ_by_ln2():
    _, bits = run_json("capacity", *WORKED, "--unit", "bits")
    _, nats = run_json("capacity", *WORKED, "--unit", "nats")
    assert bits["results"]["value"] == pytest.approx(nats["results"]["value"] / math.log(2.0), rel=1e-12)


def test_default_unit_from_environment(monkeypatch):
    monkeypatch.setattr(config, "DEFAULT_UNIT", "nats")
    _, record = run_json("capacity", *WORKED)
    assert record["unit"] == "nats"


def test_infinite_capacity_token():
    code, record = run_json("capacity", *UNIT, "--rho-s2z", "1")
    assert code == EXIT_OK
    assert record["results"]["value"] == "inf"
    assert record["results"]["alpha_star"] is None
    assert record["results"]["receiver_gain"] == "inf"


def test_double_degeneracy_exit_code(capsys):
    code, text = run("capacity", *UNIT, "--rho-xs1", "1", "--rho-s2z", "-1")
    assert code == EXIT_INDETERMINATE
    assert text == ""
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["capacity", "--p", "-1", "--q1", "1", "--q2", "1", "--n", "1"],
    ["capacity", "--q1", "1", "--q2", "1", "--n", "1"],
    ["capacity", *UNIT, "--rho-xs1", "1.5"],
    ["rate-curve", *WORKED, "--alpha-lo", "0.5", "--alpha-hi", "0.5", "--steps", "2"],
    ["sweep", *UNIT, "--from", "0", "--to", "1.5", "--steps", "4"],
    ["sweep", *UNIT, "--family", "rho_s2z=0,abc"],
    ["verify", *UNIT, "--rho-s2z", "1", "--samples", "1000"],
    ["capacity", "--config", "does/not/exist.json"],
])
def test_invalid_input_exit_code(argv):
    code, text = run(*argv)
    assert code == EXIT_INVALID
    assert text == ""


def test_unknown_config_key(tmp_path):
    path = tmp_path / "channel.json"
    path.write_text(json.dumps({"p": 1, "q1": 1, "q2": 1, "n": 1, "snr": 3}))
    assert run("capacity", "--config", str(path))[0] == EXIT_INVALID


def test_invalid_environment(monkeypatch):
    monkeypatch.setattr(Config, "MC_BATCHES", 1)
    assert run("capacity", *UNIT)[0] == EXIT_INVALID


def test_rate_curve_csv():
    code, text = run("rate-curve", *WORKED, "--unit", "nats", "--alpha-lo", "0", "--alpha-hi", "1", "--steps", "3")
    assert code == EXIT_OK
    assert text.splitlines()[0] == "alpha,rate,unit"
    assert "\r" not in text

    frame = pd.read_csv(io.StringIO(text))
    assert list(frame["alpha"]) == [0.0, 0.5, 1.0]
    assert frame["rate"].idxmax() == 1
    assert frame["rate"].iloc[2] == pytest.approx(0.5 * math.log(25.5 / 10.5), abs=1e-12)
    assert set(frame["unit"]) == {"nats"}


def test_rate_curve_json_carries_alpha_star():
    code, record = run_json("rate-curve", *WORKED, "--format", "json", "--steps", "5")
    assert code == EXIT_OK
    assert len(record["results"]["rows"]) == 5
    assert record["results"]["alpha_star"] == pytest.approx(1.0 / 3.0)


def test_sweep_rho_s2z_is_increasing():
    code, text = run("sweep", *UNIT, "--parameter", "rho_s2z", "--from", "0", "--to", "0.9", "--steps", "10")
    assert code == EXIT_OK
    assert text.splitlines()[0] == "rho_s2z,capacity,unit"
    values = list(pd.read_csv(io.StringIO(text))["capacity"])
    assert len(values) == 10
    assert all(b > a for a, b in zip(values, values[1:]))


def test_sweep_rho_xs1_decreases_to_zero():
    _, text = run("sweep", *UNIT, "--parameter", "rho_xs1", "--from", "0", "--to", "1", "--steps", "11")
    values = list(pd.read_csv(io.StringIO(text))["capacity"])
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] == 0.0


def test_sweep_snr_follows_costa_line():
    _, text = run("sweep", *UNIT, "--unit", "nats", "--parameter", "snr", "--from", "0.5", "--to", "10", "--steps", "5")
    frame = pd.read_csv(io.StringIO(text))
    for snr, value in zip(frame["snr"], frame["capacity"]):
        assert value == pytest.approx(0.5 * math.log1p(snr), rel=1e-12)


def test_sweep_writes_inf_token():
    _, text = run("sweep", *UNIT, "--parameter", "rho_s2z", "--from", "0", "--to", "1", "--steps", "3")
    assert text.splitlines()[-1] == "1.0,inf,bits"


def test_sweep_family_columns():
    code, text = run("sweep", *UNIT, "--parameter", "snr", "--from", "0.1", "--to", "10", "--steps", "4",
                     "--family", "rho_s2z=0,0.5")
    assert code == EXIT_OK
    assert text.splitlines()[0] == "snr,capacity_rho_s2z=0,capacity_rho_s2z=0.5,unit"


def test_verify_all_unit_channel():
    code, record = run_json("verify", *UNIT, "--alpha", "0.5", "--samples", "200000", "--seed", "7")
    assert code == EXIT_OK
    assert record["results"]["all_passed"] is True
    assert len(record["results"]["rows"]) == 10


def test_verify_small_sample_reports_honestly():
    code, record = run_json("verify", *UNIT, "--samples", "10", "--seed", "1")
    assert code in (EXIT_OK, EXIT_VERIFY_FAILED)
    assert (code == EXIT_OK) == record["results"]["all_passed"]
    assert record["inputs"]["samples"] == 10
    assert isinstance(record["inputs"]["samples"], int)


def test_verify_sample_size_from_environment(monkeypatch):
    monkeypatch.setattr(config, "MC_SAMPLES", 5000)
    code, text = run("verify", *UNIT, "--format", "csv")
    assert code in (EXIT_OK, EXIT_VERIFY_FAILED)
    assert text.splitlines()[0] == "name,closed_form,estimate,std_error,z_score,passed,unit"
    assert len(text.splitlines()) == 11


def test_output_round_trips_through_record():
    _, text = run("capacity", *WORKED, "--unit", "nats")
    record = OutputRecord.model_validate_json(text)
    assert record.command == "capacity"
    assert record.schema_version == "1"


def test_integer_inputs_survive_round_trip():
    _, text = run("verify", *UNIT, "--samples", "1000", "--seed", "3")
    record = OutputRecord.model_validate_json(text)
    assert record.inputs["samples"] == 1000 and isinstance(record.inputs["samples"], int)
    assert record.inputs["seed"] == 3 and isinstance(record.inputs["seed"], int)
    assert isinstance(record.inputs["p"], float)


def test_rate_curve_bits_and_nats_differ_by_ln2():
    curve = ["rate-curve", *WORKED, "--format", "json", "--alpha-lo", "-1", "--alpha-hi", "2", "--steps", "7"]
    _, bits = run_json(*curve, "--unit", "bits")
    _, nats = run_json(*curve, "--unit", "nats")
    for b, n in zip(bits["results"]["rows"], nats["results"]["rows"]):
        assert b["alpha"] == n["alpha"]
        assert b["rate"] == pytest.approx(n["rate"] / math.log(2.0), rel=1e-12)
    assert bits["results"]["capacity"] == pytest.approx(nats["results"]["capacity"] / math.log(2.0), rel=1e-12)
    assert bits["results"]["alpha_star"] == nats["results"]["alpha_star"]


def test_verify_bits_and_nats_differ_by_ln2():
    check = ["verify", *WORKED, "--samples", "20000", "--seed", "5"]
    bits_code, bits = run_json(*check, "--unit", "bits")
    nats_code, nats = run_json(*check, "--unit", "nats")
    assert bits_code == nats_code
    for b, n in zip(bits["results"]["rows"], nats["results"]["rows"]):
        assert b["name"] == n["name"]
        for key in ("closed_form", "estimate", "std_error"):
            assert b[key] == pytest.approx(n[key] / math.log(2.0), rel=1e-12)
        assert b["z_score"] == n["z_score"]
        assert b["passed"] == n["passed"]


@pytest.mark.parametrize("which,filename", [
    ("config", "channel_config.schema.json"),
    ("output", "output_record.schema.json"),
])
def test_shipped_schemas_match_models(which, filename):
    shipped = json.loads((ROOT / "schemas" / filename).read_text())
    generated = schema_for(which)
    assert set(shipped["properties"]) == set(generated["properties"])
    assert set(shipped.get("required", [])) == set(generated.get("required", []))

    code, text = run("schema", which)
    assert code == EXIT_OK
    assert json.loads(text)["title"] == generated["title"]


def test_config_load_rejects_bad_values_with_domain_errors():
    with pytest.raises(ValueError):
        ChannelConfig.load(None, p=1, q1=1, q2=0, n=1)


def test_number_token():
    assert number_token(math.inf) == "inf"
    assert number_token(None) is None
    assert number_token(0.25) == 0.25
    with pytest.raises(ValueError):
        number_token(math.nan)


def test_parse_family():
    assert parse_family("rho_xs1=0,0.5") == ("rho_xs1", [0.0, 0.5])
    assert parse_family(None) is None
    with pytest.raises(ValueError):
        parse_family("p=1,2")
