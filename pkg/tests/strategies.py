"""Hypothesis strategies: random well-formed story scripts.

Graphs are generated as script text and compiled, so every generated graph
is exactly what the compiler would build (budget folding included).
"""

from __future__ import annotations

import hypothesis.strategies as st

from lifeloop import dsl

_NAME = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)

_ACTIONS = ["age_change", "walk", "wave_hands"]


@st.composite
def script_texts(draw, max_scenes: int = 5, chain_rejoin: bool = False) -> str:
    """Random valid .story text. chain_rejoin keeps every path through every
    scene so the path count equals the per-scene guard product."""
    n_scenes = draw(st.integers(1, max_scenes))
    cuts = sorted(draw(st.lists(st.integers(1, 359), min_size=n_scenes - 1,
                                max_size=n_scenes - 1, unique=True)))
    bounds = [0, *cuts, 360]

    n_anchor = draw(st.integers(2, 5))
    mid = sorted(draw(st.lists(st.integers(1, 359), min_size=n_anchor - 2,
                               max_size=n_anchor - 2, unique=True)))
    anchor_degs = [0, *mid, 360]
    anchor_ages = sorted(draw(st.lists(st.integers(1, 120), min_size=n_anchor,
                                       max_size=n_anchor, unique=True)))

    total_names = n_scenes * 3 + 1
    names = draw(st.lists(_NAME, min_size=total_names, max_size=total_names,
                          unique=True))
    story_name, names = names[0], names[1:]
    scene_names = names[:n_scenes]
    plot_pool = names[n_scenes:]

    nominal = draw(st.integers(10, 120))
    lines = [
        f'story "{story_name}" {{',
        "  rotation_degrees 360",
        f"  nominal_rotation_s {nominal}.0",
        "  anchors { " + ", ".join(f"{d}:{a}" for d, a in zip(anchor_degs, anchor_ages)) + " }",
        f'  clue "{draw(_NAME)}" {draw(st.sampled_from(["per_user_identity", "fixed"]))}',
        "}",
    ]

    # budget cells are global per (age, action): give each scene its own ages
    age_pool = sorted(draw(st.sets(st.integers(1, 120), min_size=2 * n_scenes,
                                   max_size=2 * n_scenes)))
    plots: list[tuple[str, str | None, str]] = []  # (name, other line or None, rejoin)
    other_serial = 0
    for i, scene in enumerate(scene_names):
        both = draw(st.booleans())
        entry_ages = age_pool[2 * i: 2 * i + (2 if both else 1)]
        lines.append(f'scene "{scene}" {{')
        lines.append(f"  segment {bounds[i]} {bounds[i + 1]}")
        lines.append(f"  age {draw(st.integers(1, 120))}")
        for age in entry_ages:
            lines.append(f"  frames {age} pause 4")
            for action in draw(st.sets(st.sampled_from(_ACTIONS), max_size=3)):
                lo = draw(st.integers(1, 60))
                hi = draw(st.integers(lo, 70))
                count = str(lo) if lo == hi else f"{lo}..{hi}"
                lines.append(f"  frames {age} {action} {count}")

        # the keep plot chains to the next scene so every scene stays reachable
        next_scene = scene_names[i + 1] if i + 1 < n_scenes else "lap_boundary"
        if chain_rejoin:
            stop_choices = [next_scene]
        else:
            stop_choices = ["lap_boundary", *scene_names[i + 1:]]

        keep_plot = plot_pool[2 * i]
        plots.append((keep_plot, None, next_scene))
        lines.append(f'  on keep_walking -> "{keep_plot}"')
        if draw(st.booleans()):
            stop_plot = plot_pool[2 * i + 1]
            other = None
            if draw(st.booleans()):
                lo = draw(st.integers(1, 40))
                hi = draw(st.integers(lo, 60))
                count = str(lo) if lo == hi else f"{lo}..{hi}"
                other = f'  other "char{other_serial}" {count}'
                other_serial += 1
            plots.append((stop_plot, other, draw(st.sampled_from(stop_choices))))
            lines.append(f'  on stop_walking -> "{stop_plot}"')
        lines.append("}")

    for name, other, rejoin in plots:
        lines.append(f'plot "{name}" {{')
        if other:
            lines.append(other)
        if rejoin == "lap_boundary":
            lines.append("  rejoin lap_boundary")
        else:
            lines.append(f'  rejoin "{rejoin}"')
        lines.append("}")

    return "\n".join(lines) + "\n"


def compiled(text: str):
    result = dsl.compile_source(text)
    assert result.ok, [d.render() for d in result.diagnostics] + [text]
    return result.graph
