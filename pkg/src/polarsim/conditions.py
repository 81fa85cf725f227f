"""Condition preparation: one agent-only run per polarization level, its
final state duplicated across the three recommendation-bias cells.

Bias only changes how the human-phase feed is assembled, so the 2x3 study
grid needs exactly two engine runs. Each emitted snapshot carries a
condition tag naming its (polarization, bias) cell.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Iterable, Optional

from .engine import SimulationConfig, run
from .feed import Bias, Polarization
from .gateway import Gateway
from .storage import save_snapshot

CONDITION_FILENAME = "condition_{polarization}_{bias}.json"


def condition_path(out_dir: Path, polarization: Polarization, bias: Bias) -> Path:
    return Path(out_dir) / CONDITION_FILENAME.format(
        polarization=polarization.value, bias=bias.value
    )


def prepare_conditions(
    out_dir: Path,
    gateway_factory: Callable[[], Gateway],
    polarized_config: Optional[SimulationConfig] = None,
    moderate_config: Optional[SimulationConfig] = None,
    biases: Iterable[Bias] = tuple(Bias),
) -> list[Path]:
    """Run both cells and write the tagged snapshots; returns the paths."""
    out_dir = Path(out_dir)
    cells = {
        Polarization.POLARIZED: polarized_config or SimulationConfig.polarized(),
        Polarization.MODERATE: moderate_config or SimulationConfig.moderate(),
    }
    written: list[Path] = []
    for polarization, config in cells.items():
        state = run(config, gateway_factory())
        for bias in biases:
            path = condition_path(out_dir, polarization, bias)
            save_snapshot(
                path,
                config,
                state,
                condition={"polarization": polarization.value, "bias": bias.value},
            )
            written.append(path)
    return written
