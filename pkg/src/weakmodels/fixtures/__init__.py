"""Reference models shipped with the package.

Names follow the figures they stand for; a ``-P`` suffix marks a copy that
carries transition probabilities. FIG2B, FIG7S and FIG8S(-MONO) are
stand-ins built to have the properties the figures are described as having.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..model import WeakModel, parse_model

FIXTURES = {
    "FIG1": "fig1.wm",
    "FIG2A": "fig2a.wm",
    "FIG2A-P": "fig2a_p.wm",
    "FIG2B": "fig2b.wm",
    "FIG3A": "fig3a.wm",
    "FIG3A-P": "fig3a_p.wm",
    "FIG3B": "fig3b.wm",
    "FIG3B-P": "fig3b_p.wm",
    "FIG4": "fig4.wm",
    "FIG5A": "fig5a.wm",
    "FIG5A-P": "fig5a_p.wm",
    "FIG5A-P-SLOW": "fig5a_p_slow.wm",
    "FIG7S": "fig7s.wm",
    "FIG7S-P": "fig7s_p.wm",
    "FIG8S": "fig8s.wm",
    "FIG8S-P": "fig8s_p.wm",
    "FIG8S-MONO": "fig8s_mono.wm",
    "FIG8S-MONO-P": "fig8s_mono_p.wm",
}


def fixture_text(name: str) -> str:
    try:
        filename = FIXTURES[name.upper()]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}") from None
    return resources.files(__package__).joinpath(filename).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def load_fixture(name: str) -> WeakModel:
    return parse_model(fixture_text(name))
