"""Built-in experiment presets for the four benchmark problems."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from app.core.errors import ConfigError
from app.schemas.experiment import (
    AllenCahn,
    CahnHilliard,
    CircleArray,
    CosCos,
    Crystallites,
    ExperimentConfig,
    GridSpec,
    Patch,
    RandomUniform,
    StabilizedCahnHilliard,
    SwiftHohenberg,
)

logger = logging.getLogger(__name__)

# (scheme label, BDF order) per column of a convergence table
Column = Tuple[str, int]


@dataclass(frozen=True)
class Preset:
    """
    A benchmark problem together with the studies run on it.

    Attributes:
        name: Preset key ("1", "1ch", "2", "3", "3g1", "4")
        description: One-line summary
        config: Base run
        tables: Convergence tables by name, each a tuple of columns
        dt_list: Coarse steps of the convergence tables
        dt_ref: Reference step of the convergence tables
        energy_dts: Extra steps for the energy-decay comparison
        compare_labels: Schemes run side by side on the base config
        compare_dt: Step of the side-by-side runs when it differs from the base step
    """

    name: str
    description: str
    config: ExperimentConfig
    tables: Dict[str, Tuple[Column, ...]] = field(default_factory=dict)
    dt_list: Tuple[float, ...] = ()
    dt_ref: Optional[float] = None
    energy_dts: Tuple[float, ...] = ()
    compare_labels: Tuple[str, ...] = ()
    compare_dt: Optional[float] = None


_BDF_COLUMNS = tuple(("resav", k) for k in (1, 2, 3, 4))
_FIRST_ORDER_COLUMNS = (("esav", 1), ("esav:10", 1), ("resav", 1))


def _example1(desk: bool) -> Preset:
    n = 64 if desk else 256
    dt_list = (1 / 16, 1 / 32, 1 / 64, 1 / 128)
    config = ExperimentConfig(
        model=AllenCahn(epsilon=0.01),
        grid=GridSpec(lx=2 * math.pi, ly=2 * math.pi, nx=n, ny=n),
        scheme="resav",
        order=1,
        dt=0.01,
        t_end=1.0,
        s_scale=1.0,
        kappa=1.0,
        ic=CosCos(amplitude=0.5),
    )
    return Preset(
        name="1",
        description="Allen-Cahn, eps=0.01 on [0,2pi]^2, 0.5cos(x)cos(y)",
        config=config,
        tables={"bdf": _BDF_COLUMNS, "first_order": _FIRST_ORDER_COLUMNS},
        dt_list=dt_list,
        dt_ref=min(dt_list) / 16,
        compare_labels=("esav", "esav:10", "resav", "traditional_esav"),
    )


def _example1_ch(desk: bool) -> Preset:
    n = 64 if desk else 256
    config = ExperimentConfig(
        model=CahnHilliard(epsilon=0.4),
        grid=GridSpec(lx=2 * math.pi, ly=2 * math.pi, nx=n, ny=n),
        scheme="resav",
        order=1,
        dt=0.01,
        t_end=1.0,
        ic=CosCos(amplitude=0.5),
    )
    return Preset(
        name="1ch",
        description="Cahn-Hilliard, eps^2=0.16 on [0,2pi]^2, 0.5cos(x)cos(y)",
        config=config,
        tables={"bdf": _BDF_COLUMNS},
        dt_list=(1 / 32, 1 / 64, 1 / 128, 1 / 256),
        dt_ref=1 / 4096 if desk else 1e-4,
    )


def _example2(desk: bool) -> Preset:
    n = 128 if desk else 256
    t_end = 10.0 if desk else 100.0
    snapshots = [t for t in (0.0, 0.5, 1.0, 3.0, 4.2, 4.8, 10.0, 100.0) if t <= t_end]
    config = ExperimentConfig(
        model=StabilizedCahnHilliard(epsilon=0.01, beta=2.0),
        grid=GridSpec(lx=2.0, ly=2.0, nx=n, ny=n),
        scheme="resav",
        order=1,
        dt=0.01,
        t_end=t_end,
        s_scale=4.0,
        ic=CircleArray(),
        snapshot_times=snapshots,
    )
    return Preset(
        name="2",
        description="Stabilized Cahn-Hilliard, 9x9 circle array on [0,2)^2",
        config=config,
        energy_dts=(0.01, 0.1, 1.0),
        compare_labels=("traditional_esav", "resav"),
        compare_dt=0.1,
    )


def _example3(desk: bool, g: float) -> Preset:
    n = 128 if desk else 256
    t_end = 100.0 if desk else (100.0 if g else 1000.0)
    times = (1.0, 10.0, 20.0, 30.0, 40.0, 100.0) if g else (10.0, 100.0, 300.0, 500.0, 800.0, 1000.0)
    config = ExperimentConfig(
        model=SwiftHohenberg(epsilon=0.025, g=g),
        grid=GridSpec(lx=100.0, ly=100.0, nx=n, ny=n),
        scheme="resav",
        order=2,
        dt=0.1,
        t_end=t_end,
        s_scale=100.0 * 100.0,
        ic=RandomUniform(mean=0.07, amplitude=0.07),
        seed=0,
        snapshot_times=[t for t in times if t <= t_end],
    )
    return Preset(
        name="3g1" if g else "3",
        description=f"Swift-Hohenberg, eps=0.025, g={g:g}, random start on [0,100]^2",
        config=config,
        energy_dts=(0.1, 1.0),
    )


def _example4(desk: bool) -> Preset:
    n = 128 if desk else 512
    t_end = 100.0 if desk else 800.0
    times = (0.0, 50.0, 100.0, 500.0, 600.0, 800.0)
    config = ExperimentConfig(
        model=SwiftHohenberg(epsilon=0.25, g=0.0),
        grid=GridSpec(lx=400.0, ly=400.0, nx=n, ny=n),
        scheme="resav",
        order=2,
        dt=0.1,
        t_end=t_end,
        s_scale=400.0 * 400.0,
        ic=Crystallites(
            phibar=0.285,
            c=0.446,
            q=0.66,
            patches=[
                Patch(cx=150.0, cy=150.0, half_width=20.0, theta=math.pi / 4),
                Patch(cx=250.0, cy=300.0, half_width=20.0, theta=0.0),
                Patch(cx=300.0, cy=200.0, half_width=20.0, theta=-math.pi / 4),
            ],
        ),
        snapshot_times=[t for t in times if t <= t_end],
    )
    return Preset(
        name="4",
        description="Phase field crystal growth from three rotated crystallites on [0,400]^2",
        config=config,
        energy_dts=(0.1, 1.0),
    )


PRESET_NAMES = ("1", "1ch", "2", "3", "3g1", "4")


def get_preset(name: str, desk: bool = False) -> Preset:
    """
    Look up a preset by name.

    Args:
        name: One of PRESET_NAMES
        desk: Reduced resolution and horizon for quick runs

    Raises:
        ConfigError: Unknown preset
    """
    builders = {
        "1": lambda: _example1(desk),
        "1ch": lambda: _example1_ch(desk),
        "2": lambda: _example2(desk),
        "3": lambda: _example3(desk, 0.0),
        "3g1": lambda: _example3(desk, 1.0),
        "4": lambda: _example4(desk),
    }
    if name not in builders:
        raise ConfigError(f"Unknown example {name!r}; expected one of {', '.join(PRESET_NAMES)}")
    preset = builders[name]()
    logger.debug(f"Loaded preset {name} ({'desk' if desk else 'full'} scale)")
    return preset
