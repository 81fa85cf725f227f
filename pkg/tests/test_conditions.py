"""Condition preparation: six tagged snapshots, two engine runs."""

from polarsim.conditions import prepare_conditions
from polarsim.engine import SimulationConfig
from polarsim.gateway import Gateway
from polarsim.kernels import BimodalOpinions, NormalOpinions
from polarsim.storage import load_snapshot


def test_emits_six_tagged_snapshots(tmp_path):
    paths = prepare_conditions(
        tmp_path,
        gateway_factory=Gateway,
        polarized_config=SimulationConfig.polarized(seed=51, n_iterations=2),
        moderate_config=SimulationConfig.moderate(seed=52, n_iterations=2),
    )
    assert len(paths) == 6
    names = sorted(p.name for p in paths)
    assert names == sorted(
        f"condition_{pol}_{bias}.json"
        for pol in ("polarized", "moderate")
        for bias in ("pro", "balanced", "contra")
    )
    for path in paths:
        assert load_snapshot(path).condition is not None


def test_bias_cells_share_the_engine_run(tmp_path):
    prepare_conditions(
        tmp_path,
        gateway_factory=Gateway,
        polarized_config=SimulationConfig.polarized(seed=53, n_iterations=2),
        moderate_config=SimulationConfig.moderate(seed=54, n_iterations=2),
    )
    pro = load_snapshot(tmp_path / "condition_polarized_pro.json")
    contra = load_snapshot(tmp_path / "condition_polarized_contra.json")
    assert pro.state.to_dict() == contra.state.to_dict()
    assert pro.condition != contra.condition


def test_snapshot_distributions_match_cells(tmp_path):
    prepare_conditions(
        tmp_path,
        gateway_factory=Gateway,
        polarized_config=SimulationConfig.polarized(seed=55, n_iterations=1),
        moderate_config=SimulationConfig.moderate(seed=56, n_iterations=1),
    )
    polarized = load_snapshot(tmp_path / "condition_polarized_balanced.json")
    moderate = load_snapshot(tmp_path / "condition_moderate_balanced.json")
    assert isinstance(polarized.config.distribution, BimodalOpinions)
    assert isinstance(moderate.config.distribution, NormalOpinions)
    # polarized opinions cluster away from zero, moderate ones around it
    assert min(abs(a.opinion) for a in polarized.state.agents.values()) > 0.3
    assert min(abs(a.opinion) for a in moderate.state.agents.values()) < 0.3


def test_rerun_with_same_seeds_byte_identical(tmp_path):
    kwargs = dict(
        gateway_factory=Gateway,
        polarized_config=SimulationConfig.polarized(seed=57, n_iterations=2),
        moderate_config=SimulationConfig.moderate(seed=58, n_iterations=2),
    )
    first_dir, second_dir = tmp_path / "one", tmp_path / "two"
    first = prepare_conditions(first_dir, **kwargs)
    second = prepare_conditions(second_dir, **kwargs)
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
