import numpy as np
import pytest

from mvsde.config import (
    Overrides,
    build_covariance,
    build_generator,
    build_initial,
    build_problem,
    effective_seed,
    effective_workers,
    parse_config,
    study_kind,
    validate_config,
)
from mvsde.errors import ConfigError

MINIMAL = """
[problem]
generator = scalar
rate = -1.0
horizon = 1.0

[coefficients]
drift = zero
diffusion = constant
diffusion_value = 1.0

[noise]
kappas = 1.0

[initial]
kind = fixed
value = 0.0
"""

STUDY = MINIMAL + """
[run]
particles = 64
steps = 32
seed = 9

[study]
kind = zeroth_order
sweep = 0.2,0.1,0.05
"""


def test_minimal_config_round_trip():
    cfg = parse_config(MINIMAL)
    assert cfg.raw_text == MINIMAL
    prob = build_problem(cfg)
    assert prob.dim == 1
    assert prob.horizon == 1.0
    # defaults fill in the run section
    assert prob.particles == 1000 and prob.steps == 1024
    assert effective_seed(cfg) == 0
    assert effective_workers(cfg) == 1
    assert study_kind(cfg) is None


def test_run_section_and_overrides():
    cfg = parse_config(STUDY)
    assert build_problem(cfg).particles == 64
    assert effective_seed(cfg) == 9
    over = Overrides(seed=100, particles=20, steps=16, workers=4)
    prob = build_problem(cfg, over)
    assert prob.particles == 20 and prob.steps == 16
    assert effective_seed(cfg, over) == 100
    assert effective_workers(cfg, over) == 4
    assert over.describe() == [
        ("override seed", "100"),
        ("override particles", "20"),
        ("override steps", "16"),
    ]


def test_comments_and_blank_lines_skipped():
    text = MINIMAL.replace("[noise]", "# full-line comment\n\n[noise]")
    prob = build_problem(parse_config(text))
    assert prob.covariance.trace_q == 1.0


def test_unknown_section_and_key_collected_together():
    bad = MINIMAL + "\n[mystery]\nfoo = 1\n" + "[run]\nbogus_key = 2\n"
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    msg = str(err.value)
    assert "unknown section [mystery]" in msg
    assert "bogus_key" in msg


def test_duplicate_key_rejected():
    bad = MINIMAL + "\n[run]\nseed = 1\nseed = 2\n"
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(bad)


def test_bad_values_rejected():
    with pytest.raises(ConfigError, match="bad value"):
        parse_config(MINIMAL.replace("rate = -1.0", "rate = fast"))
    with pytest.raises(ConfigError, match="bad value"):
        parse_config(MINIMAL.replace("generator = scalar", "generator = bogus"))
    with pytest.raises(ConfigError, match="expected 'key = value'"):
        parse_config(MINIMAL.replace("rate = -1.0", "rate -1.0"))


def test_inline_comments_are_not_supported():
    # values run to end of line, so a trailing remark is a parse error
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace("rate = -1.0", "rate = -1.0  # fast decay"))


def test_key_outside_section_rejected():
    with pytest.raises(ConfigError, match="outside any section"):
        parse_config("rate = -1.0\n" + MINIMAL)


def test_generator_builders():
    assert build_generator(parse_config(MINIMAL)).dim == 1
    heat = MINIMAL.replace("generator = scalar\nrate = -1.0", "generator = heat_modes\nmodes = 4")
    assert build_generator(parse_config(heat)).dim == 4
    diag = MINIMAL.replace("generator = scalar\nrate = -1.0", "generator = diagonal\neigenvalues = -1.0,-4.0")
    gen = build_generator(parse_config(diag))
    assert np.allclose(np.diag(gen.matrix), [-1.0, -4.0])
    div = MINIMAL.replace(
        "generator = scalar\nrate = -1.0",
        "generator = divergence_form\ngrid_size = 6\nflux_coefficient = one_plus_sine\ndrift_coefficient = zero",
    )
    assert build_generator(parse_config(div)).dim == 6


def test_missing_required_key_is_build_time_error():
    # schema accepts the text; the builder demands the generator's own keys
    text = MINIMAL.replace("rate = -1.0\n", "")
    cfg = parse_config(text)
    with pytest.raises(ConfigError, match="rate"):
        build_generator(cfg)


def test_covariance_and_initial_builders():
    cfg = parse_config(MINIMAL.replace("kappas = 1.0", "kappas = 1.0,0.5,0.25"))
    q = build_covariance(cfg)
    assert q.dim == 3 and q.trace_q == pytest.approx(1.75)
    # scalar initial value fans out along the first basis direction
    law = build_initial(parse_config(MINIMAL.replace("value = 0.0", "value = 2.0")), 3)
    assert np.allclose(law.sample(np.zeros((1, 3))), [[2.0, 0.0, 0.0]])


def test_vector_length_mismatch():
    cfg = parse_config(MINIMAL.replace("value = 0.0", "value = 1.0,2.0"))
    with pytest.raises(ConfigError):
        build_initial(cfg, 3)


def test_validate_config_study_kind():
    cfg = validate_config(STUDY, "zeroth_order")
    assert study_kind(cfg) == "zeroth_order"
    with pytest.raises(ConfigError, match="kind"):
        validate_config(STUDY, "moments")
    with pytest.raises(ConfigError, match="study"):
        validate_config(MINIMAL, "zeroth_order")


def test_study_key_gating():
    # replicate count belongs to the initial study, not the zeroth-order study
    bad = STUDY.replace("sweep = 0.2,0.1,0.05", "sweep = 0.2,0.1\nreplicates = 3")
    with pytest.raises(ConfigError, match="replicates"):
        validate_config(bad, "zeroth_order")


def test_family_gating():
    tk = STUDY.replace("kind = zeroth_order\nsweep = 0.2,0.1,0.05", "kind = trotter_kato\nsweep = 2,4\nfamily = bump")
    with pytest.raises(ConfigError, match="family"):
        validate_config(tk, "trotter_kato")


def test_initial_b_only_for_initial_study():
    text = STUDY + "\n[initial_b]\nkind = fixed\nvalue = 1.0\n"
    with pytest.raises(ConfigError, match="initial_b"):
        validate_config(text, "zeroth_order")


def test_initial_study_requires_initial_b():
    text = MINIMAL + "\n[study]\nkind = initial\n"
    with pytest.raises(ConfigError):
        validate_config(text, "initial")


def test_validate_config_is_buildable_check():
    # parses fine but cannot build: divergence generator missing grid_size
    text = MINIMAL.replace(
        "generator = scalar\nrate = -1.0",
        "generator = divergence_form\nflux_coefficient = one",
    )
    with pytest.raises(ConfigError):
        validate_config(text, None)
