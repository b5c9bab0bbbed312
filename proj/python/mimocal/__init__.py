"""UL/DL massive MIMO channel calibration: simulator, network, baselines."""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError as exc:  # pragma: no cover
    raise ImportError(
        "mimocal._core is missing; build the extension first "
        "(pip install . or cmake --build with MIMOCAL_BUILD_PYTHON=ON)"
    ) from exc
