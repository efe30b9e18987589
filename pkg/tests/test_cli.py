import json
from pathlib import Path

import pytest

from bondtca import artifacts
from bondtca.cli import main


def run(args):
    return main([str(a) for a in args])


def read_err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def generate(workdir, **kw):
    args = ["generate", "--seed", 3, "--events", 4000, "--bonds", 2]
    for key, value in kw.items():
        args += [f"--{key.replace('_', '-')}", value]
    assert run(args) == 0


class TestPipeline:
    def test_full_chain_smoke(self, workdir):
        generate(workdir, rpt_fraction=0.05, cancel_rate=0.01)
        assert run(["ingest", "--tape", "tape.csv"]) == 0
        assert run(["classify", "--clean", "clean.csv"]) == 0
        assert run(["spread", "--signed", "signed.csv"]) == 0
        assert (
            run(
                [
                    "features", "--signed", "signed.csv", "--weekly", "weekly.csv",
                    "--reference", "reference.csv", "--context", "context.csv",
                ]
            )
            == 0
        )
        assert run(["fit", "--features", "features.csv", "--model", "lasso", "--k-folds", 3]) == 0
        assert run(["impact", "--signed", "signed.csv", "--min-events", 500]) == 0
        assert run(["report", "--signed", "signed.csv"]) == 0
        for name in (
            "tape.csv", "manifest.json", "clean.csv", "filter_report.json",
            "signed.csv", "spreads.csv", "weekly.csv", "features.csv",
            "fit.json", "cv.json", "kernels.json", "signature.csv", "report.json",
        ):
            assert Path(name).exists(), name

    def test_filter_report_keys(self, workdir):
        generate(workdir)
        run(["ingest", "--tape", "tape.csv"])
        data = artifacts.read_json("filter_report.json")
        steps = data["steps"]
        assert [s["step"] for s in steps] == [1, 2, 3, 4, 5, 6, 7]
        for s in steps:
            assert {"step", "removed", "removed_pct", "remaining"} <= set(s)

    def test_reversed_ranges_exit_2(self, workdir, capsys):
        generate(workdir)
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        run(["spread", "--signed", "signed.csv"])
        run(
            [
                "features", "--signed", "signed.csv", "--weekly", "weekly.csv",
                "--reference", "reference.csv", "--context", "context.csv",
            ]
        )
        code = run(
            [
                "fit", "--features", "features.csv", "--model", "lslasso",
                "--train-range", "2015-W10:2015-W20", "--test-range", "2015-W01:2015-W05",
            ]
        )
        assert code == 2
        assert read_err(capsys)["error"] == "ConfigError"

    def test_missing_file_exit_2(self, workdir, capsys):
        assert run(["ingest", "--tape", "nope.csv"]) == 2
        assert read_err(capsys)["error"] == "ConfigError"

    def test_top_k_selects_most_traded(self, workdir):
        args = ["generate", "--seed", 4, "--events", 2500, "--bonds", 3]
        assert run(args) == 0
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        assert (
            run(["impact", "--signed", "signed.csv", "--top-k", 2, "--min-events", 100]) == 0
        )
        kernels = artifacts.read_json("kernels.json")
        assert len(kernels["bonds"]) == 2

    def test_determinism_byte_identical(self, workdir):
        generate(workdir, rpt_fraction=0.02)
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        run(["spread", "--signed", "signed.csv"])
        first = {p: Path(p).read_bytes() for p in ("clean.csv", "signed.csv", "spreads.csv", "weekly.csv")}
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        run(["spread", "--signed", "signed.csv"])
        for p, content in first.items():
            assert Path(p).read_bytes() == content

    def test_config_file_and_flag_precedence(self, workdir):
        cfg = {"generate": {"events": 1000, "bonds": 1, "seed": 9}}
        Path("cfg.json").write_text(json.dumps(cfg))
        assert run(["generate", "--config", "cfg.json", "--events", 1200]) == 0
        manifest = artifacts.read_json("manifest.json")
        assert manifest["config"]["n_events"] == 1200  # flag wins
        assert manifest["config"]["seed"] == 9  # file beats default

    def test_help_lists_subcommands(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for sub in ("generate", "ingest", "classify", "spread", "features", "fit", "impact", "report"):
            assert sub in out

    def test_unknown_flag_fails_fast(self, workdir):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--bogus-flag", "1"])
        assert exc.value.code == 2

    def test_impact_with_spread_mids(self, workdir):
        generate(workdir)
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        run(["spread", "--signed", "signed.csv"])
        assert (
            run(
                [
                    "impact", "--signed", "signed.csv", "--spreads", "spreads.csv",
                    "--min-events", 500,
                ]
            )
            == 0
        )
        kernels = artifacts.read_json("kernels.json")
        assert all(b["mid_source"] == "spread_mids" for b in kernels["bonds"].values())

    def test_numerical_failure_exit_4(self, workdir, capsys):
        # all-buy order flow makes the response correlation matrix singular
        generate(workdir, p_buy=1.0)
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        code = run(["impact", "--signed", "signed.csv", "--min-events", 100])
        assert code == 4
        assert read_err(capsys)["error"] == "NumericalError"

    def test_cap_volumes_flag(self, workdir):
        generate(workdir)
        assert (
            run(["ingest", "--tape", "tape.csv", "--cap-volumes", "--reference", "reference.csv"])
            == 0
        )
        trades = artifacts.read_clean_trades("clean.csv")
        grades = {r.cusip: r.grade for r in artifacts.read_bond_references("reference.csv").values()}
        caps = {"HY":  1_000_000.0, "IG": 5_000_000.0}
        assert all(t.volume <= caps[grades[t.cusip]] for t in trades)


class TestArtifactRoundTrips:
    def test_signed_roundtrip(self, workdir):
        generate(workdir)
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        signed = artifacts.read_signed_trades("signed.csv")
        artifacts.write_signed_trades("copy.csv", signed)
        assert artifacts.read_signed_trades("copy.csv") == signed

    def test_feature_roundtrip(self, workdir):
        generate(workdir)
        run(["ingest", "--tape", "tape.csv"])
        run(["classify", "--clean", "clean.csv"])
        run(["spread", "--signed", "signed.csv"])
        run(
            [
                "features", "--signed", "signed.csv", "--weekly", "weekly.csv",
                "--reference", "reference.csv", "--context", "context.csv",
            ]
        )
        rows = artifacts.read_feature_rows("features.csv")
        artifacts.write_feature_rows("copy.csv", rows)
        assert artifacts.read_feature_rows("copy.csv") == rows
