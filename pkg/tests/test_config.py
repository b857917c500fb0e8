import pytest

from formica.config import ConfigError, SnapshotSchedule, parse_config, serialize
from formica.presets import PRESETS


def test_empty_text_reports_mode_missing():
    with pytest.raises(ConfigError) as err:
        parse_config("")
    assert any("mode missing" in v for v in err.value.violations)


def test_minimal_particles_config():
    config = parse_config(
        """
        mode = particles
        params.chi = 0.5
        particles.n = 10
        particles.n_f = 3
        particles.n_t = 5
        seed = 3
        """
    )
    assert config.mode == "particles"
    assert config.seed == 3
    assert config.particles.n == 10
    assert config.particles.params.chi == 0.5
    assert config.particles.seed == 3


def test_duplicate_key_names_both_lines():
    with pytest.raises(ConfigError) as err:
        parse_config("mode = particles\nseed = 1\nseed = 2\n")
    msg = "; ".join(err.value.violations)
    assert "duplicate key seed" in msg
    assert "2" in msg and "3" in msg


def test_unknown_key_and_out_of_range_collected_together():
    with pytest.raises(ConfigError) as err:
        parse_config(
            """
            mode = particles
            particles.n = 1
            no.such_key = 4
            params.chi = -2.0
            """
        )
    msg = "; ".join(err.value.violations)
    assert "unknown key no.such_key" in msg
    assert "particles.n" in msg
    assert "params.chi" in msg


def test_syntax_errors_have_line_numbers():
    with pytest.raises(ConfigError) as err:
        parse_config("mode = particles\nthis is not a statement\nx =\n")
    msg = "; ".join(err.value.violations)
    assert "line 2" in msg
    assert "line 3" in msg


def test_comments_and_quotes():
    config = parse_config(
        """
        # a full-line comment
        mode = "azimuthal"   # trailing comment
        azimuthal.a11 = 1.0
        azimuthal.a22 = -1.0
        params.chi = 2.0
        """
    )
    assert config.mode == "azimuthal"
    assert config.azimuthal.a11 == 1.0


def test_preset_expands_and_roundtrips():
    config = parse_config('preset = "trail_seed"')
    assert config.mode == "particles"
    assert config.particles.law.tag == "near_trail"
    again = parse_config(serialize(config))
    assert again.values == config.values
    assert serialize(again) == serialize(config)


def test_preset_overlay_keeps_explicit_keys():
    config = parse_config('preset = "trail_seed"\nseed = 99\nparticles.n = 64\n')
    assert config.seed == 99
    assert config.particles.n == 64
    assert config.particles.law.tag == "near_trail"


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config('preset = "no_such"')
    assert any("unknown preset" in v for v in err.value.violations)


def test_all_presets_parse():
    for name in PRESETS:
        config = parse_config(f'preset = "{name}"')
        assert config.mode in ("particles", "fd", "fd2state", "azimuthal", "kernels")
        again = parse_config(serialize(config))
        assert serialize(again) == serialize(config)


def test_mode_mismatched_keys_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config("mode = kernels\nparticles.n = 50\n")
    assert any("does not apply" in v for v in err.value.violations)


def test_kernels_validation():
    with pytest.raises(ConfigError) as err:
        parse_config('mode = kernels\nkernels.p_values = "0.5,2"\n')
    assert any("p_values" in v for v in err.value.violations)
    with pytest.raises(ConfigError):
        parse_config("mode = kernels\nkernels.t_min = 0.5\nkernels.t_max = 0.1\n")


def test_snapshot_schedules():
    stride = SnapshotSchedule("stride", stride=30, count=8)
    assert stride.steps(100) == [30, 60, 90, 100]
    assert stride.steps(0) == []
    geo = SnapshotSchedule("geometric", count=8)
    steps = geo.steps(4000)
    assert steps[-1] == 4000
    assert len(steps) == 8
    assert all(a < b for a, b in zip(steps, steps[1:]))
