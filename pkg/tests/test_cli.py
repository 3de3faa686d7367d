import json

import pytest

from qcommit_lab.cli import EXIT_CAP, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, ConfigError, main, parse_config

BB84 = """
[instance]
kind = bb84-pure
lambda = 2

[params]
p = 8
r = 1

[binding]
attack = extractor
lambdas = 8..20

[hashcheck]
pairs = 3:2
"""


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _report(out, command):
    (path,) = out.glob(f"{command}-*/report.json")
    return json.loads(path.read_text())


def test_parse_defaults_and_overrides():
    cfg = parse_config(BB84, seed=3, backend="sampled")
    assert cfg.lambdas == (2,)
    assert cfg.seed == 3 and cfg.backend == "sampled"
    assert cfg.scan_lambdas == tuple(range(8, 21))
    assert cfg.digest() == parse_config(BB84, seed=3, backend="sampled").digest()
    assert cfg.digest() != parse_config(BB84, seed=4, backend="sampled").digest()


@pytest.mark.parametrize("text,field", [
    ("[instance]\nlambda = two\n", "[instance] lambda"),
    ("[instance]\nkind = qutrit\n", "[instance] kind"),
    ("[shadow]\nbackend = sampled\n", "[shadow] seed"),
    ("[tolerances]\nbogus = 1\n", "[tolerances] bogus"),
    ("[params]\np = 0.5\n", "[params] p"),
    ("[nope]\nx = 1\n", "unknown section"),
])
def test_config_errors_name_field(text, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(text)


def test_malformed_config_exit_2(tmp_path, capsys):
    cfg = _write(tmp_path, "[instance]\nlambda = two\n")
    assert main(["lemma1", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "[instance] lambda" in capsys.readouterr().err


def test_good_set_cmd_mass_zero(tmp_path):
    out = tmp_path / "o"
    assert main(["lemma1", "--config", str(_write(tmp_path, BB84)), "--out", str(out)]) == EXIT_OK
    rep = _report(out, "lemma1")
    assert rep["results"]["lambda=2"][0]["mass_T"] == 0.0
    assert "config_hash" in rep and "versions" in rep and "tolerances" in rep


def test_good_set_cmd_constant_vacuous(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, "[instance]\nkind = constant\nlambda = 2\n[params]\nr = 1\n")
    assert main(["lemma1", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    res = _report(out, "lemma1")["results"]["lambda=2"][0]
    assert res["mass_T"] == 1.0 and res["bound_vacuous"]


def test_hashcheck_line(tmp_path, capsys):
    assert main(["hashcheck", "--config", str(_write(tmp_path, BB84)), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "lambda=3 m=2 |H|=64 deviation 0" in capsys.readouterr().out


def test_binding_bound_satisfied(tmp_path, capsys):
    assert main(["binding", "--config", str(_write(tmp_path, BB84)), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "verdict: bound satisfied" in capsys.readouterr().out


def test_hiding_orthogonal_td_zero(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, "[instance]\nkind = orthogonal\nlambda = 2\n")
    assert main(["hiding", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    (table,) = out.glob("hiding-*/table.csv")
    header, row = table.read_text().splitlines()
    assert dict(zip(header.split(","), row.split(",")))["td_C"] == "0.0"


def test_hiding_bb84_flags_s_form(tmp_path):
    # s = 1 from the classical extractor but td_C > 0: the s-form threshold check fails (exit 1)
    out = tmp_path / "o"
    cfg = _write(tmp_path, "[instance]\nkind = bb84-pure\nlambda = 2\n")
    assert main(["hiding", "--config", str(cfg), "--out", str(out)]) == EXIT_VIOLATION
    checks = _report(out, "hiding")["results"]["lambda=2"]["checks"]
    assert checks["uhlmann_overlap"] and checks["fvdg"] and not checks["td_le_sqrt_1_minus_s_sq"]


def test_cap_exit_3(tmp_path, capsys):
    cfg = _write(tmp_path, "[instance]\nkind = orthogonal\nlambda = 3\n")
    assert main(["hiding", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CAP
    assert "exceeds dense cap" in capsys.readouterr().err


def test_extract_sampled_and_svsi(tmp_path):
    cfg = _write(tmp_path, BB84 + "\n[shadow]\nseed = 9\n[svsi]\nadversaries = 20\n")
    out = tmp_path / "o"
    assert main(["extract", "--config", str(cfg), "--out", str(out), "--backend", "sampled"]) == EXIT_OK
    assert _report(out, "extract")["results"]["lambda=2"]["t_samples"] == 111
    assert main(["svsi", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    res = _report(out, "svsi")["results"]["orthogonal,lambda=2"]
    assert res["correctness"] == 1.0 and res["bound_holds"] == 20


def test_deterministic_reports(tmp_path):
    cfg = _write(tmp_path, BB84 + "\n[shadow]\nseed = 9\n")
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["extract", "--config", str(cfg), "--out", str(out), "--backend", "sampled"]) == EXIT_OK
    (ra,), (rb,) = a.glob("extract-*/report.json"), b.glob("extract-*/report.json")
    assert ra.read_bytes() == rb.read_bytes()
    assert ra.parent.name == rb.parent.name


def test_report_empty_and_sweep(tmp_path, capsys):
    empty = tmp_path / "empty"
    assert main(["report", "--out", str(empty)]) == EXIT_OK
    assert (empty / "summary.csv").read_text() == ""
    out = tmp_path / "o"
    cfg = _write(tmp_path, "[instance]\nkind = orthogonal\nlambda = 1..3\n[run]\nworkers = 3\n")
    assert main(["binding", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    (out / "junk").mkdir()
    (out / "junk" / "report.json").write_text("{not json")
    assert main(["report", "--out", str(out)]) == EXIT_OK
    assert "warning" in capsys.readouterr().err
    rows = json.loads((out / "summary.json").read_text())["rows"]
    counts = [int(r["block_count"]) for r in rows if r["command"] == "binding"]
    assert counts == sorted(counts) and len(counts) == 3
