"""Tests for density_sieve.cli – subcommands and exit codes.

Covers:
- extract: certificate file, summary table, reproducible bytes
- verify: residual / ensemble / Monte Carlo checks from a certificate
- pseudo-union: builtins and index-set files
- counterexample: defeat reports and failure exit codes
- demo, missing command, --config and error mapping
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from density_sieve.cli import EXIT_FAILURE, EXIT_OK, EXIT_SPEC, main

# ========================================================================
# Helpers
# ========================================================================


@pytest.fixture(autouse=True)
def in_tmp(tmp_path, monkeypatch):
    """Run every command from an empty directory."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _load(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _extract(out: Path, *extra: str) -> int:
    return main(["extract", "--epsilon", "1/4", "--depth", "3", "-o", str(out), *extra])


# ========================================================================
# extract
# ========================================================================


class TestExtract:
    """density-sieve extract."""

    def test_dyadic_certificate(self, in_tmp, capsys):
        out = in_tmp / "cert.json"
        assert _extract(out) == EXIT_OK
        doc = _load(out)
        assert doc["boundaries"] == [0, 1, 3, 9]
        assert doc["minimal_ends"] == [1, 3, 7]
        assert doc["epsilon"] == "1/4"
        assert doc["seed"] == 0
        assert doc["config"]["check_factor"] == 10
        text = capsys.readouterr().out
        assert "Seed     : 0 (default)" in text
        assert "| 3 | 9 | 7 | 0 | 1/32 |" in text

    def test_default_output_name(self, in_tmp):
        assert main(["extract", "--epsilon", "1/2", "--depth", "2"]) == EXIT_OK
        assert (in_tmp / "certificate.json").exists()

    def test_reproducible_bytes(self, in_tmp):
        a, b = in_tmp / "a.json", in_tmp / "b.json"
        assert _extract(a, "--seed", "7") == EXIT_OK
        assert _extract(b, "--seed", "7") == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_depth_sixty(self, in_tmp):
        out = in_tmp / "deep.json"
        assert main(["extract", "--epsilon", "1/4", "--depth", "60", "-o", str(out)]) == EXIT_OK
        doc = _load(out)
        assert len(doc["boundaries"]) == 61
        assert doc["boundaries"][-1] > 2**50

    def test_rotation(self, in_tmp):
        out = in_tmp / "rot.json"
        rc = main(
            [
                "extract",
                "--family",
                "rotation",
                "--step",
                "1/3",
                "--length",
                "1/2",
                "--epsilon",
                "1/2",
                "--depth",
                "3",
                "-o",
                str(out),
            ]
        )
        assert rc == EXIT_OK
        doc = _load(out)
        assert doc["boundaries"] == [0, 2, 6, 9]
        assert doc["residuals"] == ["1/6", "0", "0"]
        assert doc["family"]["params"] == {"step": "1/3", "length": "1/2"}

    def test_family_file(self, in_tmp):
        spec = in_tmp / "family.json"
        spec.write_text(json.dumps({"kind": "dyadic"}), encoding="utf-8")
        out = in_tmp / "cert.json"
        assert _extract(out, "--family-file", str(spec)) == EXIT_OK
        assert _load(out)["family"]["kind"] == "dyadic"

    @pytest.mark.parametrize("epsilon", ["0.5", "0", "abc"])
    def test_bad_epsilon(self, epsilon, capsys):
        rc = main(["extract", "--epsilon", epsilon, "--depth", "3"])
        assert rc == EXIT_SPEC
        assert "Error:" in capsys.readouterr().err

    def test_bad_family_file(self, in_tmp):
        spec = in_tmp / "family.json"
        spec.write_text(json.dumps({"kind": "spiral"}), encoding="utf-8")
        assert _extract(in_tmp / "c.json", "--family-file", str(spec)) == EXIT_SPEC

    def test_budget_exit(self, in_tmp):
        listed = in_tmp / "listed.json"
        listed.write_text(
            json.dumps(
                {
                    "window": [0, 1, 1, 1],
                    "sets": [[[0, 1, 1, 2]]],
                    "continuation": "repeat",
                }
            ),
            encoding="utf-8",
        )
        spec = in_tmp / "family.json"
        spec.write_text(
            json.dumps({"kind": "file", "params": {"path": str(listed)}}), encoding="utf-8"
        )
        cfg = in_tmp / "small.yml"
        cfg.write_text("iter_cap: 100\n", encoding="utf-8")
        rc = main(
            [
                "--config",
                str(cfg),
                "extract",
                "--family-file",
                str(spec),
                "--epsilon",
                "1/4",
                "--depth",
                "2",
            ]
        )
        assert rc == EXIT_FAILURE

    def test_verbose_reports_file(self, in_tmp, capsys):
        assert _extract(in_tmp / "cert.json", "-v") == EXIT_OK
        assert "Wrote" in capsys.readouterr().out


# ========================================================================
# verify
# ========================================================================


class TestVerify:
    """density-sieve verify."""

    def test_residual_from_certificate(self, in_tmp, capsys):
        cert = in_tmp / "cert.json"
        assert _extract(cert) == EXIT_OK
        out = in_tmp / "report.json"
        rc = main(["verify", "--cert", str(cert), "--residual", "--j", "1", "-o", str(out)])
        assert rc == EXIT_OK
        doc = _load(out)
        check = doc["checks"][0]
        assert check["name"] == "truncated_residual"
        assert check["metrics"]["residual"] == "0"
        assert doc["inputs"]["K"] == 3
        assert "## Verification" in capsys.readouterr().out

    def test_ensemble_inline(self, in_tmp):
        rc = main(
            ["verify", "--epsilon", "1/4", "--depth", "5", "--seeds", "30", "--j", "2"]
        )
        assert rc == EXIT_OK
        doc = _load(in_tmp / "report.json")
        assert doc["checks"][0]["name"] == "bc_bound"
        assert len(doc["checks"][0]["per_seed"]) == 30

    def test_points(self, in_tmp):
        cert = in_tmp / "cert.json"
        _extract(cert)
        assert main(["verify", "--cert", str(cert), "--points", "20"]) == EXIT_OK
        metrics = _load(in_tmp / "report.json")["checks"][0]["metrics"]
        assert metrics["points"] == "20"
        assert int(metrics["min"]) >= 1

    def test_nothing_to_verify(self, in_tmp):
        cert = in_tmp / "cert.json"
        _extract(cert)
        assert main(["verify", "--cert", str(cert)]) == EXIT_SPEC

    def test_missing_certificate(self, in_tmp):
        assert main(["verify", "--cert", str(in_tmp / "nope.json"), "--residual"]) == EXIT_SPEC

    def test_tampered_certificate(self, in_tmp):
        cert = in_tmp / "cert.json"
        _extract(cert)
        doc = _load(cert)
        doc["residuals"][2] = "1/2"
        cert.write_text(json.dumps(doc), encoding="utf-8")
        assert main(["verify", "--cert", str(cert), "--residual"]) == EXIT_SPEC

    def test_residual_disagreeing_with_family(self, in_tmp, capsys):
        cert = in_tmp / "rot.json"
        rc = main(
            [
                "extract",
                "--family",
                "rotation",
                "--step",
                "1/3",
                "--length",
                "1/2",
                "--epsilon",
                "1/2",
                "--depth",
                "3",
                "-o",
                str(cert),
            ]
        )
        assert rc == EXIT_OK
        doc = _load(cert)
        doc["residuals"][0] = "0"
        cert.write_text(json.dumps(doc), encoding="utf-8")
        assert main(["verify", "--cert", str(cert), "--residual"]) == EXIT_SPEC
        assert "recorded residual 0 != 1/6" in capsys.readouterr().err

    def test_reproducible_bytes(self, in_tmp):
        cert = in_tmp / "cert.json"
        _extract(cert, "--seed", "5")
        a, b = in_tmp / "a.json", in_tmp / "b.json"
        for out in (a, b):
            rc = main(["verify", "--cert", str(cert), "--residual", "--j", "2", "-o", str(out)])
            assert rc == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_k_beyond_depth(self, in_tmp):
        cert = in_tmp / "cert.json"
        _extract(cert)
        rc = main(["verify", "--cert", str(cert), "--seeds", "30", "--K", "5", "--j", "2"])
        assert rc == EXIT_SPEC

    def test_inline_needs_epsilon(self):
        assert main(["verify", "--residual"]) == EXIT_SPEC


# ========================================================================
# pseudo-union
# ========================================================================


class TestPseudoUnion:
    """density-sieve pseudo-union."""

    def test_builtins(self, in_tmp, capsys):
        rc = main(["pseudo-union", "--builtin", "squares", "--builtin", "powers"])
        assert rc == EXIT_OK
        doc = _load(in_tmp / "pseudo_union.json")
        assert len(doc["cutoffs"]) == 2
        assert doc["cutoffs"][1] >= 144
        assert doc["result"]["tails"][1][1] == doc["cutoffs"][1]
        assert "| 2 |" in capsys.readouterr().out

    def test_files_and_builtins(self, in_tmp):
        part = in_tmp / "part.json"
        part.write_text(json.dumps({"finite": [1, 2, 3, 50]}), encoding="utf-8")
        assert main(["pseudo-union", str(part), "--builtin", "squares:3"]) == EXIT_OK
        doc = _load(in_tmp / "pseudo_union.json")
        assert doc["result"]["tails"][0][0] == {"finite": [1, 2, 3, 50]}
        assert [c["part"] for c in doc["containment"]] == [1, 2]

    def test_certificate_selection_as_part(self, in_tmp):
        cert = in_tmp / "cert.json"
        _extract(cert)
        z = in_tmp / "z.json"
        z.write_text(json.dumps(_load(cert)["z"]), encoding="utf-8")
        assert main(["pseudo-union", str(z), "--builtin", "powers"]) == EXIT_OK

    def test_reproducible_bytes(self, in_tmp):
        a, b = in_tmp / "a.json", in_tmp / "b.json"
        for out in (a, b):
            argv = ["pseudo-union", "--builtin", "squares", "--builtin", "powers"]
            rc = main([*argv, "-o", str(out)])
            assert rc == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize("name", ["cubes", "squares:x", "empty:2"])
    def test_bad_builtin(self, name):
        assert main(["pseudo-union", "--builtin", name]) == EXIT_SPEC

    def test_no_parts(self):
        assert main(["pseudo-union"]) == EXIT_SPEC


# ========================================================================
# counterexample
# ========================================================================


class TestCounterexample:
    """density-sieve counterexample."""

    def test_squares(self, in_tmp, capsys):
        assert main(["counterexample", "--builtin", "squares"]) == EXIT_OK
        doc = _load(in_tmp / "defeat.json")
        assert doc["n0"] == 16
        assert doc["start_block"] == 4
        assert doc["chain"] == [125]
        assert doc["coverage_count"] == 2
        assert doc["validation"]["partition"]["passed"] is True
        assert "Validation : PASS" in capsys.readouterr().out

    def test_selection(self, in_tmp):
        assert main(["counterexample", "--builtin", "selection", "--seed", "3"]) == EXIT_OK
        doc = _load(in_tmp / "defeat.json")
        assert "ap" in doc["z"]
        chain = doc["chain"]
        assert chain and all(not _ap_contains(doc["z"]["ap"], n) for n in chain)

    def test_z_file(self, in_tmp):
        z = in_tmp / "z.json"
        z.write_text(json.dumps({"formula": {"kind": "powers", "base": 2}}), encoding="utf-8")
        assert main(["counterexample", "--z", str(z), "-o", "out.json"]) == EXIT_OK
        assert _load(in_tmp / "out.json")["chain"] == [125]

    def test_reproducible_bytes(self, in_tmp):
        a, b = in_tmp / "a.json", in_tmp / "b.json"
        for out in (a, b):
            assert main(["counterexample", "--builtin", "squares", "-o", str(out)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_too_shallow(self, capsys):
        rc = main(["counterexample", "--depth", "2", "--builtin", "squares"])
        assert rc == EXIT_FAILURE
        assert "deeper" in capsys.readouterr().err

    def test_depth_cap(self):
        assert main(["counterexample", "--depth", "7"]) == EXIT_FAILURE


def _ap_contains(ap, n):
    blocks, choices = ap["blocks"], ap["choices"]
    for k in range(1, len(blocks)):
        if blocks[k - 1] <= n < blocks[k]:
            return (n - blocks[k - 1]) % k == choices[k - 1]
    return False


# ========================================================================
# Misc
# ========================================================================


class TestMisc:
    """demo, help and config handling."""

    def test_demo(self, capsys):
        assert main(["demo"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "[0, 1, 3, 9]" in out
        assert "cutoffs=" in out
        assert "chain=[125]" in out

    def test_no_command(self, capsys):
        assert main([]) == EXIT_SPEC
        assert "usage" in capsys.readouterr().out.lower()

    def test_missing_config(self, in_tmp):
        assert main(["--config", str(in_tmp / "nope.yml"), "demo"]) == EXIT_SPEC

    def test_bad_config(self, in_tmp):
        cfg = in_tmp / "bad.yml"
        cfg.write_text("check_factor: 2\n", encoding="utf-8")
        assert main(["--config", str(cfg), "demo"]) == EXIT_SPEC

    def test_auto_detected_config(self, in_tmp):
        (in_tmp / ".density-sieve.yml").write_text("default_seed: 9\n", encoding="utf-8")
        assert main(["extract", "--epsilon", "1/2", "--depth", "2"]) == EXIT_OK
        doc = _load(in_tmp / "certificate.json")
        assert doc["seed"] == 9
        assert doc["config"]["default_seed"] == 9
