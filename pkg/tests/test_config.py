import pytest

from radks.config import OUTPUT_ROOT_ENV, load_config, parse_overrides, resolve_output_dir
from radks.errors import ConfigurationError

MINIMAL = """\
# format_version=1
[grid]
n = 5
R = 1.0
N = 128
"""


def write(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return path


def test_minimal_config_fills_defaults(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert cfg.n == 5 and cfg.N == 128 and cfg.R == 1.0
    assert cfg.base_kind == "constant"
    assert cfg.gamma == 1.5
    assert cfg.cfl == 0.9
    assert cfg.t_end == 1.0
    assert cfg.blowup_factor == 1e6
    assert cfg.outdir == "out"
    assert cfg.warnings == []


def test_missing_version_line_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="format_version"):
        load_config(write(tmp_path, "[grid]\nn = 5\nR = 1.0\nN = 128\n"))


def test_low_dimension_is_warning_not_error(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL.replace("n = 5", "n = 3")))
    assert cfg.n == 3
    assert any("blowup regime" in w for w in cfg.warnings)


def test_missing_grid_key_names_it(tmp_path):
    text = "# format_version=1\n[grid]\nn = 5\nR = 1.0\n"
    with pytest.raises(ConfigurationError, match="grid.N"):
        load_config(write(tmp_path, text))


def test_all_violations_reported_at_once(tmp_path):
    text = (
        "# format_version=1\n"
        "[grid]\nn = 1\nR = -2\nN = 2\n"
        "[stepper]\ncfl = 3\nt_end = -1\n"
    )
    with pytest.raises(ConfigurationError) as err:
        load_config(write(tmp_path, text))
    msg = str(err.value)
    for key in ("grid.n", "grid.R", "grid.N", "stepper.cfl", "stepper.t_end"):
        assert key in msg


def test_overrides_applied_before_validation(tmp_path):
    path = write(tmp_path, MINIMAL)
    cfg = load_config(path, ["stepper.t_end=2.5", "grid.N=256"])
    assert cfg.t_end == 2.5
    assert cfg.N == 256


def test_bad_override_syntax(tmp_path):
    with pytest.raises(ConfigurationError):
        parse_overrides(["notakeyvalue"])
    with pytest.raises(ConfigurationError):
        parse_overrides(["plainkey=1"])


def test_custom_base_requires_existing_path(tmp_path):
    text = MINIMAL + "[base]\nkind = custom\npath = /nonexistent/snap.csv\n"
    with pytest.raises(ConfigurationError, match="base.path"):
        load_config(write(tmp_path, text))


def test_sweep_axes_parsed(tmp_path):
    text = MINIMAL + "[sweep]\ngrid.N = 64, 128\nstepper.t_end = 0.1\n"
    cfg = load_config(write(tmp_path, text))
    assert cfg.sweep_axes == {"grid.N": ["64", "128"], "stepper.t_end": ["0.1"]}


def test_sweep_axis_requires_dotted_key(tmp_path):
    text = MINIMAL + "[sweep]\nbadkey = 1, 2\n"
    with pytest.raises(ConfigurationError, match="dotted"):
        load_config(write(tmp_path, text))


def test_output_root_env(tmp_path, monkeypatch):
    cfg = load_config(write(tmp_path, MINIMAL))
    monkeypatch.setenv(OUTPUT_ROOT_ENV, "/data/results")
    assert str(resolve_output_dir(cfg)) == "/data/results/out"
    monkeypatch.delenv(OUTPUT_ROOT_ENV)
    assert str(resolve_output_dir(cfg)) == "out"


def test_rho_must_fit_in_ball(tmp_path):
    text = MINIMAL + "[probe]\nrho = 0.5, 1.5\n"
    with pytest.raises(ConfigurationError, match="probe.rho"):
        load_config(write(tmp_path, text))


def test_inline_comments_allowed(tmp_path):
    text = MINIMAL.replace("N = 128", "N = 128  # cells")
    cfg = load_config(write(tmp_path, text))
    assert cfg.N == 128
