import csv
import io
import json
import math

import pytest

from qkd_pulseopt.cli import main
from qkd_pulseopt.config import ConfigError, parse_config
from qkd_pulseopt.io import TapFileError, read_taps, roundtrip_taps, taps_from_json, taps_to_json, write_taps
from qkd_pulseopt.optimizers import OptimizerConfig, optimize
from qkd_pulseopt.pulse_shaping import rrc_taps
from qkd_pulseopt.security_rate import LinkParams


# -- tap files ---------------------------------------------------------------

@pytest.mark.parametrize("a,n", [(0.1, 13), (0.5, 101), (0.0, 1001), (1.0, 7)])
def test_rrc_roundtrip_is_bit_exact(a, n):
    f = rrc_taps(a, 4, n)
    back = roundtrip_taps(f)
    assert back == f
    assert back.taps.tobytes() == f.taps.tobytes()
    assert back.label == f.label and back.roll_off == a


def test_optimized_roundtrip(tmp_path):
    tr = optimize(OptimizerConfig(method="gradient"), rrc_taps(0.1, 4, 101), LinkParams(10, 0.3, beta=1.0))
    path = tmp_path / "o.json"
    write_taps(tr.final_taps, path)
    assert read_taps(path).taps.tobytes() == tr.final_taps.taps.tobytes()


def test_truncated_file_is_rejected():
    text = taps_to_json(rrc_taps(0.1, 4, 13))
    with pytest.raises(TapFileError, match="offset"):
        taps_from_json(text[: len(text) // 2])


@pytest.mark.parametrize("doc", [
    {"sps": 4},
    {"taps": [1.0]},
    {"sps": 4, "taps": [1.0], "extra": 1},
    {"sps": "4", "taps": [1.0]},
    {"sps": 4, "taps": [1.0, "x"]},
    {"sps": 4, "taps": []},
    [1, 2],
])
def test_malformed_documents(doc):
    with pytest.raises(TapFileError):
        taps_from_json(json.dumps(doc))


# -- configuration -----------------------------------------------------------

def test_minimal_config_defaults():
    cfg = parse_config('{"command": "sweep"}')
    spec = cfg.sweep_spec()
    assert (spec.tx_num_taps, spec.rx_num_taps, spec.sps) == (13, 101, 4)
    assert cfg.attenuation_db_per_km == 0.2
    assert cfg.beta == 0.95


def test_override_precedence():
    cfg = parse_config('{"n_bar": 10}', {"n_bar": 100})
    assert cfg.n_bar == 100.0
    assert cfg.link_params().n_bar == 100.0


def test_nested_override():
    cfg = parse_config('{"reinforce": {"population": 8}}', {"reinforce.sigma_init": 0.05})
    assert cfg.reinforce.population == 8
    assert cfg.reinforce.sigma_init == 0.05


@pytest.mark.parametrize("text,needle", [
    ('{"n_bar": -1}', "n_bar"),
    ('{"nbar": 10}', "nbar: unknown key"),
    ('{"reinforce": {"rate": 1}}', "reinforce.rate"),
    ('{"tx_num_taps": 12}', "tx_num_taps"),
    ('{"beta": "high"}', "beta"),
    ('{"n_bar": 10,\n "beta": }', "line 2 column"),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


# -- command line ------------------------------------------------------------

def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _csv_rows(text):
    return list(csv.DictReader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))


def test_rrc_then_evaluate_matched_lossless(tmp_path, capsys):
    path = tmp_path / "rx.json"
    code, _, _ = _run(["rrc", "--roll-off", 0.1, "--sps", 4, "--taps", 1001, "--output", path], capsys)
    assert code == 0
    code, out, _ = _run(["evaluate", "--tx", path, "--rx", path, "--distance", 0, "--n-ch", 0,
                         "--beta", 1, "--n-bar", 10], capsys)
    assert code == 0
    row = _csv_rows(out)[0]
    assert abs(float(row["skr"]) - math.log2(11)) < 1e-3


def test_evaluate_short_matched_pair_is_limited_by_truncation(tmp_path, capsys):
    # a 101-tap matched pair still leaks energy into neighbouring symbols, which costs
    # about 0.05 bits at zero distance
    path = tmp_path / "rx.json"
    _run(["rrc", "--taps", 101, "--output", path], capsys)
    _, out, _ = _run(["evaluate", "--tx", path, "--rx", path, "--beta", 1], capsys)
    row = _csv_rows(out)[0]
    assert 0 < float(row["isi_power"]) < 1e-4
    assert float(row["skr"]) == pytest.approx(3.40904456, abs=1e-6)


def test_optimize_is_byte_reproducible(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        code, _, _ = _run(["optimize", "--seed", 7, "--max-iterations", 300, "-o", d, "--distance", 30], capsys)
        assert code == 0
        outs.append(((d / "optimized_taps.json").read_bytes(), (d / "trace.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_montecarlo_passes(capsys):
    code, out, _ = _run(["montecarlo", "--distance", 50, "--seed", 1], capsys)
    assert code == 0
    assert out.strip().splitlines()[-1] == "PASS"


def test_sweep_writes_distance_tables(tmp_path, capsys):
    settings = ["--set", "distances_km=[0,50]", "--set", "roll_offs=[0.1]", "--set", "n_bars=[10]",
                "--set", "noise_sweep=[0.001]", "--set", "optimize=false"]
    code, _, _ = _run(["sweep", "-o", tmp_path, *settings], capsys)
    assert code == 0
    fig1 = list(csv.DictReader((tmp_path / "fig1_skr_vs_distance.csv").open()))
    fig2 = list(csv.DictReader((tmp_path / "fig2_skr_vs_distance_noise.csv").open()))
    assert len(fig1) == 4 and len(fig2) == 4
    assert {r["n_ch"] for r in fig2} == {"0.001"}


def test_freqresp_and_kse_grid(tmp_path, capsys):
    code, _, _ = _run(["freqresp", "-o", tmp_path, "--num-points", 512], capsys)
    assert code == 0
    header = (tmp_path / "fig4_freq_response.csv").read_text().splitlines()[0]
    assert header == "fT,rrc_a0.1_sps4_n13,rrc_a0.1_sps4_n101"
    code, _, _ = _run(["kse-grid", "-o", tmp_path, "--set", "optimize=false"], capsys)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "fig3_kse_grid.csv").open()))
    assert rows[-1]["variant"] == "argmax" and len(rows) == 10


def test_errors_are_single_line(tmp_path, capsys):
    code, _, err = _run(["evaluate", "--set", "n_bar=-1"], capsys)
    assert code == 2
    assert err.count("\n") == 1 and err.startswith("error: config: n_bar")
    bad = tmp_path / "bad.json"
    bad.write_text('{"sps": 4, "taps": [1.0,')
    code, _, err = _run(["evaluate", "--tx", bad], capsys)
    assert code == 2 and err.startswith("error: taps:") and "offset" in err
    code, _, err = _run(["evaluate", "--tx", tmp_path / "missing.json"], capsys)
    assert code == 1 and err.startswith("error: io:")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n_bar": 10, "beta": 1.0, "tau_ch": 1.0}))
    _, out, _ = _run(["evaluate", "--config", cfg, "--n-bar", 100, "--taps", 1001,
                      "--tx-taps", 1001, "--rx-taps", 1001], capsys)
    assert float(_csv_rows(out)[0]["skr"]) == pytest.approx(math.log2(101), abs=1e-2)
