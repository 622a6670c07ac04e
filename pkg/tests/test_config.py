import numpy as np
import pytest

from splitmspe.config import DEFAULTS, SCHEMA, load_config, parse_config
from splitmspe.errors import ConfigError

BASIC = """\
seed = 7
n = 10
d = 2
r = 0.9, 0.5
rho = 0.1
beta2 = -2:2:21     # inclusive grid
snr = 1, 3
methods = ls, ridge, garrote, split

[ridge]
lambda_count = 5
"""


class TestParsing:
    def test_values(self):
        cfg = parse_config(BASIC)
        assert cfg.get("seed") == 7
        assert cfg.get("r") == [0.9, 0.5]
        assert cfg.get("snr") == [1.0, 3.0]
        assert cfg.get("methods") == ["ls", "ridge", "garrote", "split"]
        assert cfg.get("lambda_count", "ridge") == 5

    def test_range_syntax_is_inclusive_and_rounded(self):
        b2 = parse_config(BASIC).get("beta2")
        assert len(b2) == 21
        assert b2[0] == -2.0 and b2[-1] == 2.0 and b2[10] == 0.0
        assert b2[6] == -0.8

    def test_defaults_filled(self):
        cfg = parse_config("n = 5\nd = 2\nr = 0.5\nrho = 0.2\n")
        for key, val in DEFAULTS["solver"].items():
            assert cfg.get(key, "solver") == val
        assert cfg.get("N") == 200 and cfg.get("M") == 500

    def test_every_schema_key_present(self):
        cfg = parse_config("")
        for section, keys in SCHEMA.items():
            assert set(keys) <= set(cfg.values[section])

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# header\n\n   n = 4   # trailing\n")
        assert cfg.get("n") == 4

    def test_matrix_values(self):
        cfg = parse_config("d = 2\nn = 8\ngamma_r = 1, 0.3; 0.3, 1\ngamma_rho = 1, 0; 0, 1\n")
        (spec,) = cfg.correlation_specs()
        np.testing.assert_array_equal(spec.gamma_r, [[1.0, 0.3], [0.3, 1.0]])

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(BASIC)
        assert load_config(path).get("n") == 10


class TestDiagnostics:
    @pytest.mark.parametrize("text, line, key", [
        ("n = 10\nd = 2\nbeta = 1\n", 3, "beta"),
        ("n = 10\n[ridge]\nlambda_cnt = 4\n", 3, "ridge.lambda_cnt"),
        ("n = ten\n", 1, "n"),
        ("n = 10\nn = 11\n", 2, "n"),
        ("n = 1.5\n", 1, "n"),
        ("test_sampling = sometimes\n", 1, "test_sampling"),
    ])
    def test_line_and_key(self, text, line, key):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.line == line
        assert info.value.key == key
        assert f"line {line}" in str(info.value)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="line 2.*unknown section"):
            parse_config("n = 3\n[lasso]\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("n 3\n")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.cfg")

    def test_exit_code_is_config_error(self):
        assert ConfigError("x").exit_code == 2


class TestValidation:
    def test_valid(self):
        parse_config(BASIC).validate()

    def test_unknown_method_reports_line(self):
        cfg = parse_config("n = 10\nd = 2\nr = 0.5\nrho = 0.1\nmethods = ls, lsso\n")
        with pytest.raises(ConfigError, match="line 5.*lsso"):
            cfg.validate()

    def test_missing_dimension(self):
        with pytest.raises(ConfigError, match="'d'"):
            parse_config("n = 10\nr = 0.5\nrho = 0.1\n").validate()

    def test_invalid_correlation(self):
        cfg = parse_config("n = 10\nd = 3\nr = -0.9\nrho = 0.1\n")
        with pytest.raises(ConfigError, match="line 3"):
            cfg.validate()

    def test_scenario_constraint_is_mapped_to_key(self):
        cfg = parse_config("n = 10\nd = 2\nr = 0.5\nrho = 0.1\nsnr = -1\n")
        with pytest.raises(ConfigError) as info:
            cfg.validate()
        assert info.value.key == "snr"

    def test_both_correlation_forms_rejected(self):
        cfg = parse_config("n = 8\nd = 2\nr = 0.5\nrho = 0.1\ngamma_r = 1,0;0,1\ngamma_rho = 1,0;0,1\n")
        with pytest.raises(ConfigError, match="either"):
            cfg.validate()

    def test_jobs_positive(self):
        cfg = parse_config(BASIC + "\n")
        cfg.set("jobs", 0)
        with pytest.raises(ConfigError, match="jobs"):
            cfg.validate()

    def test_ridge_grid_scaled_by_n(self):
        grid = parse_config(BASIC).grid()
        assert len(grid.ridge_lambdas) == 5
        assert grid.ridge_lambdas[0] == pytest.approx(10 * 1e3)
        assert grid.ridge_lambdas[-1] == pytest.approx(10 * 1e-4)

    def test_scenarios_cover_correlation_pairs(self):
        scs = parse_config(BASIC).scenarios()
        assert [(sc.r, sc.rho) for sc in scs] == [(0.9, 0.1), (0.5, 0.1)]
        assert all(sc.seed == 7 for sc in scs)


class TestEffectiveConfig:
    def test_round_trip(self):
        cfg = parse_config(BASIC)
        again = parse_config("\n".join(cfg.effective_lines()))
        for section in cfg.values:
            for key, val in cfg.values[section].items():
                if (section, key) in (("", "output"), ("", "jobs")):
                    continue
                other = again.values[section][key]
                if isinstance(val, np.ndarray):
                    np.testing.assert_array_equal(val, other)
                else:
                    assert other == val, (section, key)

    def test_override_recorded(self):
        cfg = parse_config(BASIC)
        cfg.set("seed", 11)
        assert "seed = 11" in cfg.effective_lines()

    def test_run_environment_not_echoed(self):
        lines = parse_config("jobs = 4\noutput = x.csv\n" + BASIC).effective_lines()
        assert not any(line.startswith(("jobs", "output")) for line in lines)
