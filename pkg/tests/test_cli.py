"""Command-line surface tests: argument validation, file round trips, and
the text/CSV outputs of each subcommand."""

import csv

import pytest

from patternzip import cli


def run_cli(args):
    return cli.main(list(args))


# --- compress / decompress ----------------------------------------------------


@pytest.mark.parametrize("model", ["known-k", "mixture", "unknown-k", "two-part"])
def test_file_round_trip(tmp_path, model, capsys):
    src = tmp_path / "in.txt"
    packed = tmp_path / "out.pz"
    restored = tmp_path / "back.txt"
    src.write_bytes(b"abracadabra, abracadabra: mississippi!")
    assert run_cli(["compress", str(src), str(packed), "--model", model]) == 0
    assert run_cli(["decompress", str(packed), str(restored)]) == 0
    assert restored.read_bytes() == src.read_bytes()
    out = capsys.readouterr().out
    assert "modified redundancy" in out


def test_word_tokens_round_trip(tmp_path, capsys):
    src = tmp_path / "in.txt"
    packed = tmp_path / "out.pz"
    restored = tmp_path / "back.txt"
    src.write_bytes(b"the cat and the hat and the cat\n")
    assert run_cli(["compress", str(src), str(packed), "--tokens", "words"]) == 0
    assert run_cli(["decompress", str(packed), str(restored)]) == 0
    assert restored.read_bytes() == src.read_bytes()


def test_compress_reports_letter_count(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_bytes(b"lossless")
    run_cli(["compress", str(src), str(tmp_path / "o.pz")])
    out = capsys.readouterr().out
    assert "n=8 k=4" in out


def test_compress_missing_input_fails(tmp_path, capsys):
    code = run_cli(["compress", str(tmp_path / "nope.txt"), str(tmp_path / "o.pz")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_eps_flag_validated():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["sweep", "--n", "100", "--eps", "1.5"])
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["sweep", "--n", "100", "--eps", "0"])


# --- sweep ---------------------------------------------------------------------


def test_sweep_stdout_csv(capsys):
    code = run_cli([
        "sweep", "--n", "800", "--worst-case", "--k-list", "2,7",
        "--schemes", "known-k,unknown-k",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    header = lines[0].split(",")
    assert header == list(cli.lab._CSV_FIELDS)
    rows = list(csv.DictReader(lines))
    assert len(rows) == 4
    for row in rows:
        got = float(row["modified_redundancy"])
        expect = (float(row["bits"]) - float(row["neg_log_pml"])) / int(row["n"])
        assert got == pytest.approx(expect, abs=1e-9)


def test_sweep_out_and_plot_files(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    plot = tmp_path / "fig"
    code = run_cli([
        "sweep", "--n", "600", "--worst-case", "--k-list", "2,5",
        "--out", str(out), "--plot", str(plot),
    ])
    assert code == 0
    assert out.exists()
    assert (tmp_path / "fig.csv").exists()
    assert (tmp_path / "fig_plot.py").exists()


def test_sweep_rejects_unknown_scheme():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["sweep", "--n", "100", "--schemes", "lz77"])


def test_sweep_deterministic_given_seed(capsys):
    args = ["sweep", "--n", "400", "--k-list", "3,6", "--trials", "2", "--seed", "5"]
    run_cli(args)
    first = capsys.readouterr().out
    run_cli(args)
    assert capsys.readouterr().out == first


def test_default_k_grid_shape():
    ks = cli.default_k_grid(10**6)
    assert ks[0] == 2
    assert ks[-1] == 1000
    assert 30 <= len(ks) <= 40
    assert list(ks) == sorted(set(ks))
    # capped by n when the sequence is short
    assert cli.default_k_grid(50)[-1] == 50


def test_worker_cap_env(monkeypatch):
    monkeypatch.setenv("PATTERNZIP_THREADS", "2")
    assert cli._worker_cap(8) == 2
    monkeypatch.setenv("PATTERNZIP_THREADS", "")
    assert cli._worker_cap(8) == 8
    monkeypatch.delenv("PATTERNZIP_THREADS")
    assert cli._worker_cap(3) == 3


# --- bounds ----------------------------------------------------------------------


def test_bounds_table_lists_five_families(capsys):
    assert run_cli(["bounds", "--n", "1000000", "--k", "400", "--eps", "0.1"]) == 0
    out = capsys.readouterr().out
    for name in (
        "minimax-lower", "most-sources-lower", "achievable-upper",
        "known-k-coder", "unknown-k-coder",
    ):
        assert name in out


def test_bounds_csv_parses(capsys):
    assert run_cli(["bounds", "--n", "10000", "--k", "30", "--format", "csv"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 5
    for row in rows:
        total = float(row["total_bits"])
        rate = float(row["bits_per_symbol"])
        assert total == pytest.approx(rate * 10000, rel=1e-12)


def test_bounds_k_above_n_fails_cleanly(capsys):
    assert run_cli(["bounds", "--n", "100", "--k", "200"]) == 1
    assert "error:" in capsys.readouterr().err


# --- entropy ----------------------------------------------------------------------


def test_entropy_uniform_output(capsys):
    assert run_cli([
        "entropy", "--k", "5", "--n", "64", "--samples", "40", "--seed", "3"
    ]) == 0
    out = capsys.readouterr().out
    assert "letter cost" in out
    assert "pattern entropy" in out


def test_entropy_zipf_runs(capsys):
    assert run_cli([
        "entropy", "--k", "4", "--n", "50", "--dist", "zipf", "--s", "1.5",
        "--samples", "30",
    ]) == 0
    assert "dist=zipf" in capsys.readouterr().out


def test_entropy_rejects_large_alphabet(capsys):
    assert run_cli(["entropy", "--k", "40", "--n", "50"]) == 1
    assert "error:" in capsys.readouterr().err


# --- verify / help -----------------------------------------------------------------


def test_verify_suites_green(capsys):
    assert run_cli(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok   ") == len(cli._VERIFY_SUITES)
    assert "FAIL" not in out


@pytest.mark.parametrize(
    "cmd,flags",
    [
        ("compress", ["--model", "--eps", "--tokens"]),
        ("decompress", []),
        ("sweep", ["--n", "--eps", "--schemes", "--k-list", "--full-sweep",
                   "--worst-case", "--prior", "--trials", "--seed", "--workers",
                   "--out", "--plot"]),
        ("bounds", ["--n", "--k", "--eps", "--format"]),
        ("entropy", ["--k", "--n", "--dist", "--s", "--samples", "--seed"]),
        ("verify", []),
    ],
)
def test_help_covers_every_flag(cmd, flags, capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for flag in flags:
        assert flag in text
