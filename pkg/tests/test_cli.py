"""Command-line interface and manifest round-trips."""

import json
from fractions import Fraction as F

import pytest

from densepde.cli import main
from densepde.construct import construct_sequence
from densepde.jets import parse_pde_text
from densepde.manifest import (
    load_sequence,
    read_json,
    sample_grid,
    save_sequence,
    sequence_from_json,
    sequence_to_json,
    write_json,
)
from densepde.verify import verify_solution

TRANSPORT = """dim: 1
vars: x
order: 1
domain: (0,1)
eq: u_x - u
"""

IMPOSSIBLE = """dim: 1
vars: x
order: 1
domain: (0,1)
eq: u_x^2 + 1
"""


@pytest.fixture
def pde_file(tmp_path):
    path = tmp_path / "transport.pde"
    path.write_text(TRANSPORT)
    return str(path)


class TestManifest:
    def build(self):
        op = parse_pde_text(TRANSPORT)
        return op, construct_sequence(
            op, [(F(1, 4),), (F(3, 4),)], [1, 2], seed={(1, (0,)): 1}
        )

    def test_roundtrip_verifies(self, tmp_path):
        op, seq = self.build()
        path = tmp_path / "seq.json"
        save_sequence(str(path), seq, header={"created": "t"})
        loaded = load_sequence(str(path))
        assert verify_solution(op, loaded).passed
        assert loaded.orders == seq.orders

    def test_payload_deterministic(self):
        _, seq = self.build()
        a = json.dumps(sequence_to_json(seq), sort_keys=True)
        b = json.dumps(sequence_to_json(seq), sort_keys=True)
        assert a == b

    def test_tampered_jet_fails_verification(self, tmp_path):
        op, seq = self.build()
        path = tmp_path / "seq.json"
        save_sequence(str(path), seq)
        raw = read_json(str(path))
        values = raw["stages"][1]["jets"][0]["values"]
        key = sorted(values)[0]
        values[key] = "7/3"
        write_json(str(path), raw)
        result = verify_solution(op, load_sequence(str(path)))
        assert not result.passed

    def test_wrong_format_rejected(self):
        with pytest.raises(ValueError):
            sequence_from_json({"format": "something-else"})

    def test_grid_samples_header_and_rows(self):
        _, seq = self.build()
        text = sample_grid(seq, 3)
        lines = text.strip().splitlines()
        assert lines[0] == "x,unknown,value"
        assert len(lines) == 4
        # sample at 1/4 sits on the first bump plateau: value 1
        assert lines[1] == "0.25,u,1.0"


class TestExitCodes:
    def test_range_ok(self, pde_file, capsys):
        assert main(["range", pde_file, "--level", "2", "--count", "2"]) == 0
        assert "OK" in capsys.readouterr().out

    def test_range_math_failure(self, tmp_path, capsys):
        bad = tmp_path / "bad.pde"
        bad.write_text("""dim: 1
vars: x
order: 0
domain: (0,1)
eq: 0*u - 1
""")
        assert main(["range", str(bad), "--level", "1"]) == 1
        assert "FAIL" in capsys.readouterr().err

    def test_construct_and_verify(self, pde_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        code = main(
            ["construct", pde_file, "--schedule", "1,2", "--count", "2",
             "--out", out, "--resolution", "2"]
        )
        assert code == 0
        manifest = f"{out}/sequence.json"
        assert main(["verify", manifest]) == 0
        assert "PASS" in capsys.readouterr().out
        assert (tmp_path / "out" / "samples.csv").exists()

    def test_construct_impossible_fails(self, tmp_path, capsys):
        bad = tmp_path / "imp.pde"
        bad.write_text(IMPOSSIBLE)
        assert main(["construct", str(bad), "--count", "1"]) == 1
        assert "FAIL" in capsys.readouterr().err

    def test_verify_tampered_manifest_fails(self, pde_file, tmp_path, capsys):
        out = str(tmp_path / "out")
        main(["construct", pde_file, "--schedule", "0,1", "--count", "2",
              "--out", out])
        path = f"{out}/sequence.json"
        raw = read_json(path)
        values = raw["stages"][0]["jets"][0]["values"]
        values[sorted(values)[0]] = "5"
        write_json(path, raw)
        assert main(["verify", path]) == 1

    def test_usage_error_missing_file(self, capsys):
        assert main(["range", "no-such-file.pde"]) == 2
        assert "error" in capsys.readouterr().err

    def test_usage_error_bad_points(self, pde_file, capsys):
        assert main(["range", pde_file, "--points", "1/2,1/2"]) == 2

    def test_argparse_usage_exit(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["no-such-command"])
        assert info.value.code == 2

    def test_demo_model(self, capsys):
        assert main(["demo", "model"]) == 0
        assert "witness" in capsys.readouterr().out

    def test_demo_lewy(self, capsys):
        assert main(["demo", "lewy"]) == 0
        assert "PASS" in capsys.readouterr().out


class TestDeterminism:
    def test_range_output_stable(self, pde_file, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        main(["range", pde_file, "--level", "1", "--out", out1])
        main(["range", pde_file, "--level", "1", "--out", out2])
        a = read_json(f"{out1}/range.json")
        b = read_json(f"{out2}/range.json")
        a.pop("header")
        b.pop("header")
        assert a == b
