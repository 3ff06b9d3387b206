import json
import math
from fractions import Fraction

import pytest

from fpsop.cli import COMMANDS, Config, ConfigError, main, parse_config, run

MINIMAL = '{"p": 2, "beta": {"preset": "dirichlet"}, "phi": {"monomial": 2}}'


def run_main(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.normalized["delta"] == {"preset": "ones"}
        assert cfg.normalized["u"] is None
        assert cfg.u.coeffs == (1,)
        assert cfg.space.truncation_degree == 512
        assert cfg.seed == 0

    def test_p_below_one_rejected(self):
        with pytest.raises((ConfigError, Exception), match=">= 1"):
            parse_config('{"p": 0.5, "beta": {"preset": "hardy"}}')

    def test_delta_anchor_rejected(self):
        with pytest.raises(ConfigError, match="delta\\(0\\)"):
            parse_config('{"beta": {"preset": "hardy"}, "delta": {"values": [2, 1]}}')

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            parse_config('{"beta": {"preset": "hardy"}, "spin": 3}')

    def test_malformed_json_reports_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config('{\n "p": 2,,\n}')

    def test_file_path_source(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(MINIMAL)
        cfg = parse_config(str(path))
        assert cfg.normalized["phi"] == {"monomial": 2}

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            parse_config("no/such/config.json")

    def test_fraction_strings(self):
        cfg = parse_config(
            '{"p": "3/2", "beta": {"values": ["1", "1/2", "1/4"]},'
            ' "truncation": {"degree": 2, "tail_window": 1}}')
        assert cfg.p == Fraction(3, 2)
        assert cfg.beta.value(2) == Fraction(1, 4)

    def test_round_trip_identity(self):
        cfg = parse_config(MINIMAL)
        again = parse_config(cfg.serialize())
        assert again == cfg
        assert again.serialize() == cfg.serialize()

    def test_round_trip_rich_config(self):
        text = json.dumps({
            "p": "5/2",
            "beta": {"values": ["1", "1/3", "1/9"]},
            "delta": {"preset": "geometric", "ratio": "1/2"},
            "u": {"coeffs": [0, "2/3"]},
            "phi": {"monomial": 2},
            "truncation": {"degree": 2, "tail_window": 1, "tolerance": 1e-6},
            "seed": 11,
        })
        cfg = parse_config(text)
        assert parse_config(cfg.serialize()) == cfg

    def test_theorem_code_validated(self):
        with pytest.raises(ConfigError, match="thm99"):
            parse_config('{"beta": {"preset": "hardy"}, "theorem": "thm99"}')


class TestRun:
    def test_norm_command(self):
        cfg = parse_config('{"beta": {"preset": "dirichlet"}, "f": {"coeffs": [1, 2]}}')
        report = run("norm", cfg)
        assert report["result"]["value"] == pytest.approx(3.0)

    def test_product_command(self):
        cfg = parse_config(
            '{"beta": {"preset": "hardy"}, "delta": {"preset": "factorial"},'
            ' "f": {"coeffs": [0, 1]}, "g": {"coeffs": [0, 1]},'
            ' "truncation": {"degree": 4, "tail_window": 1}}')
        report = run("product", cfg)
        assert report["result"]["coeffs"] == [0, 0, 2, 0, 0]

    def test_compose_command(self):
        cfg = parse_config(
            '{"beta": {"preset": "hardy"}, "f": {"coeffs": [0, 0, 0, 1]},'
            ' "phi": {"coeffs": [1, 1]}, "truncation": {"degree": 3, "tail_window": 1}}')
        report = run("compose", cfg)
        assert report["result"]["coeffs"] == [1, 3, 3, 1]

    def test_theta_command(self):
        cfg = parse_config(
            '{"beta": {"preset": "hardy"}, "phi": {"coeffs": [0, 1, 1]},'
            ' "n": 3, "power": 2}')
        report = run("theta", cfg)
        assert report["result"]["value"] == 2

    def test_bound_needs_theorem(self):
        cfg = parse_config(MINIMAL)
        with pytest.raises(ConfigError, match="theorem"):
            run("bound", cfg)

    def test_bound_thm21(self):
        cfg = parse_config(
            '{"beta": {"preset": "dirichlet"}, "phi": {"monomial": 4},'
            ' "truncation": {"degree": 2048, "tolerance": 1e-4}}')
        report = run("bound", cfg, theorem="thm21")
        cert = report["certificates"][0]
        assert cert["name"] == "composition-norm-exact"
        assert cert["kind"] == "exact"
        assert cert["value"] == pytest.approx(2.0, abs=1e-3)
        assert cert["attained_at"] is None
        assert cert["converged"] is True

    def test_bound_divergent_reports_inf(self):
        cfg = parse_config(
            '{"beta": {"preset": "hardy"}, "delta": {"preset": "factorial"},'
            ' "u": {"monomial": 1}, "phi": {"monomial": 1}}')
        report = run("bound", cfg, theorem="cor26")
        named = {c["name"]: c for c in report["certificates"]}
        assert named["progression-ratio-lower"]["value"] == "inf"
        assert named["progression-ratio-lower"]["converged"] is False

    def test_estimate_sandwich(self):
        cfg = parse_config(
            '{"beta": {"preset": "dirichlet"}, "u": {"monomial": 1},'
            ' "phi": {"monomial": 2}, "truncation": {"degree": 256}}')
        report = run("estimate", cfg)
        oracle = report["oracle"]["estimate"]
        assert oracle == pytest.approx(math.sqrt(2), abs=1e-6)
        named = {c["name"]: c for c in report["certificates"]}
        assert named["progression-ratio-lower"]["value"] - 1e-9 <= oracle
        assert oracle <= named["progression-ratio-upper"]["value"] + 1e-9

    def test_check_algebra_passes(self):
        cfg = parse_config(
            '{"beta": {"preset": "hardy"}, "delta": {"preset": "inverse-factorial"},'
            ' "truncation": {"degree": 64}}')
        report = run("check-algebra", cfg)
        assert report["certificates"][0]["value"] == pytest.approx(1.5)
        assert report["result"]["all_passed"] is True
        laws = report["result"]["laws"]
        assert set(laws) == {"commutative", "associative", "bilinear", "unital",
                             "submultiplicative"}
        assert all(v["failed"] == 0 for v in laws.values())

    def test_unknown_command(self):
        cfg = parse_config(MINIMAL)
        with pytest.raises(ConfigError):
            run("transmogrify", cfg)


class TestMain:
    def test_exit_zero_and_json_output(self, capsys):
        code, out = run_main(capsys, "bound", "--theorem", "thm21",
                             "--config", MINIMAL)
        assert code == 0
        report = json.loads(out)
        assert report["command"] == "bound"
        assert report["elapsed_ms"] is None

    def test_divergence_still_exits_zero(self, capsys):
        cfg = ('{"beta": {"preset": "hardy"}, "phi": {"monomial": 2},'
               ' "theorem": "thm22"}')
        code, out = run_main(capsys, "bound", "--config", cfg)
        assert code == 0
        report = json.loads(out)
        named = {c["name"]: c for c in report["certificates"]}
        assert named["composition-power-sum-upper"]["value"] == "inf"

    def test_config_error_exit_two(self, capsys):
        code = main(["bound", "--theorem", "thm21", "--config",
                     '{"p": 0.5, "beta": {"preset": "hardy"}}'])
        assert code == 2

    def test_quiet_drops_config_echo(self, capsys):
        code, out = run_main(capsys, "bound", "--theorem", "thm21",
                             "--config", MINIMAL, "--quiet")
        assert code == 0
        assert "config" not in json.loads(out)

    def test_out_flag_writes_file(self, tmp_path, capsys):
        target = tmp_path / "report.json"
        code, out = run_main(capsys, "norm", "--config",
                             '{"beta": {"preset": "hardy"}, "f": {"coeffs": [3]}}',
                             "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["result"]["value"] == 3.0

    def test_byte_stable_reports(self, capsys):
        args = ("estimate", "--config",
                '{"beta": {"preset": "dirichlet"}, "u": {"monomial": 1},'
                ' "phi": {"monomial": 2}, "truncation": {"degree": 64}}')
        _, first = run_main(capsys, *args)
        _, second = run_main(capsys, *args)
        assert first == second

    def test_seed_flag_echoes(self, capsys):
        code, out = run_main(capsys, "check-algebra", "--config",
                             '{"beta": {"preset": "hardy"},'
                             ' "delta": {"preset": "inverse-factorial"},'
                             ' "truncation": {"degree": 32}}',
                             "--seed", "5")
        assert code == 0
        assert json.loads(out)["config"]["seed"] == 5

    def test_timings_flag_fills_elapsed(self, capsys):
        code, out = run_main(capsys, "theta", "--config",
                             '{"beta": {"preset": "hardy"},'
                             ' "phi": {"coeffs": [0, 1, 1]}, "n": 3, "power": 2}',
                             "--timings")
        assert code == 0
        assert json.loads(out)["elapsed_ms"] > 0
