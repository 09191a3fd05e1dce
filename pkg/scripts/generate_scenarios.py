"""Regenerate the bundled scenario files under src/pbcrowd/scenarios/.

Agent counts, spacings, radii and mass ratios follow the standard benchmark
setups; room and corridor geometry and goal placement are reconstructions and
each file says so in its description.

    python scripts/generate_scenarios.py
"""

import json
from pathlib import Path

from pbcrowd.scenario import Ellipse, formation_points

OUT = Path(__file__).resolve().parents[1] / "src" / "pbcrowd" / "scenarios"


def grid(rows, cols, spacing):
    return {"type": "grid", "rows": rows, "cols": cols, "spacing": spacing}


def doc(name, description, duration, goals, groups, obstacles=(), params=None):
    return {
        "schema_version": 1,
        "name": name,
        "description": description,
        "duration": duration,
        "goals": list(goals),
        "groups": list(groups),
        "obstacles": list(obstacles),
        "params": params or {},
    }


def passing(name, rows, cols, spacing, gap, shift, mode, seconds, note):
    """Two facing blocks that trade places: each agent targets its start shifted across."""
    depth = round((cols - 1) * spacing, 6)
    width = (rows - 1) * spacing
    travel = gap + depth
    return doc(
        name,
        f"{note} Two {rows}x{cols} grids (rows across, cols along the walking axis), "
        f"spacing {spacing} m, {gap} m apart, second group shifted {shift} m sideways. "
        f"Every agent walks {travel} m straight ahead, so the groups swap blocks. "
        "Gap, lateral shift and block aspect are reconstructions.",
        int(round(seconds * 48)),
        [{"kind": "offset", "offset": [travel, 0.0]}, {"kind": "offset", "offset": [-travel, 0.0]}],
        [
            {"formation": grid(rows, cols, spacing), "origin": [-gap / 2 - depth, -width / 2],
             "goal": 0, "species": "east"},
            {"formation": grid(rows, cols, spacing), "origin": [gap / 2, -width / 2 + shift],
             "goal": 1, "species": "west"},
        ],
        params={"avoidance_mode": mode},
    )


def bottleneck(name, rows, cols, spacing, door, length, seconds, note):
    """Block of agents in a walled room that funnels into a short corridor."""
    room = round((rows - 1) * spacing + 4.0, 6)
    funnel = round(room / 2 - door / 2, 6)
    half, edge = door / 2, room / 2
    depth = round((cols - 1) * spacing, 6)
    back = round(funnel + depth + 20.0, 6)
    obstacles = [
        {"type": "segment", "a": [-back, edge], "b": [-funnel, edge]},
        {"type": "segment", "a": [-back, -edge], "b": [-funnel, -edge]},
        {"type": "segment", "a": [-funnel, edge], "b": [0.0, half]},
        {"type": "segment", "a": [-funnel, -edge], "b": [0.0, -half]},
        {"type": "segment", "a": [0.0, half], "b": [length, half]},
        {"type": "segment", "a": [0.0, -half], "b": [length, -half]},
    ]
    goal_x = length + 40.0
    return doc(
        name,
        f"{note} {rows}x{cols} block (spacing {spacing} m) in a {room} m wide room whose "
        f"side walls narrow at 45 degrees into a {door} m wide, {length} m long corridor "
        f"starting at x=0. All agents share one goal point at ({goal_x}, 0); an agent has "
        f"exited once its centre passes x={length}. Room, funnel, corridor and goal are "
        "reconstructions.",
        int(round(seconds * 48)),
        [{"kind": "points", "points": [[goal_x, 0.0]]}],
        [{"formation": grid(rows, cols, spacing),
          "origin": [round(-funnel - 1.0 - depth, 6), round(-(rows - 1) * spacing / 2, 6)],
          "goal": 0}],
        obstacles,
        params={"avoidance_mode": "none"},
    )


def bears_and_rabbits():
    # 1,024 rabbits + 128 bears = 1,152 agents; "size" read as diameter
    rabbits = {"formation": grid(32, 32, 2.0), "origin": [-70.0, -31.0], "radius": 0.5,
               "mass": 1.0, "goal": 0, "species": "rabbit"}
    bears = {"formation": grid(16, 8, 6.0), "origin": [10.0, -45.0], "radius": [1.25, 2.0],
             "mass": 30.0, "goal": 1, "species": "bear"}
    return doc(
        "bears_and_rabbits",
        "1,024 rabbits (size 1.0) cross 128 bears (size 2.5-4.0, 30x the mass), 1,152 agents. "
        "Size is read as diameter. Block layout and travel distances are reconstructions.",
        int(round(120 * 48)),
        [{"kind": "offset", "offset": [140.0, 0.0]}, {"kind": "offset", "offset": [-90.0, 0.0]}],
        [rabbits, bears],
        params={"avoidance_mode": "avoidance"},
    )


def dense_ellipsoid():
    ellipse = {"type": "ellipse", "semi_axes": [20.0, 9.9], "spacing": 3.3}
    n_small = len(formation_points(Ellipse((20.0, 9.9), 3.3)))
    rest = 1920 - n_small
    cols = 59
    rows, extra = divmod(rest, cols)
    small = {"formation": ellipse, "origin": [-60.0, 0.0], "goal": 0, "species": "ellipse"}
    block = [{"formation": grid(rows, cols, 3.0), "origin": [-10.0, -(rows - 1) * 1.5],
              "goal": 1, "species": "block"}]
    if extra:
        block.append({"formation": {"type": "explicit",
                                    "points": [[3.0 * k, 0.0] for k in range(extra)]},
                      "origin": [-10.0, (rows + 1) * 1.5], "goal": 1, "species": "block"})
    return doc(
        "dense_ellipsoid",
        f"Ellipse-shaped group of {n_small} (spacing 3.3) crosses a larger rectangular group "
        f"of {rest} (spacing 3.0); 1,920 agents in total. Shapes, sizes and travel distances "
        "are reconstructions.",
        int(round(150 * 48)),
        [{"kind": "offset", "offset": [260.0, 0.0]}, {"kind": "offset", "offset": [-100.0, 0.0]}],
        [small] + block,
        params={"avoidance_mode": "avoidance"},
    )


def proximal(mode):
    half = 4.0
    walls = [{"type": "segment", "a": [-40.0, half], "b": [40.0, half]},
             {"type": "segment", "a": [-40.0, -half], "b": [40.0, -half]}]
    return doc(
        f"proximal_{mode}",
        "Two tightly packed groups of 50 (5 across, 10 deep, spacing 1.2 m) pass in an 8 m "
        "wide hallway. Hallway width and packing are reconstructions.",
        int(round(90 * 48)),
        [{"kind": "offset", "offset": [36.0, 0.0]}, {"kind": "offset", "offset": [-36.0, 0.0]}],
        [{"formation": grid(5, 10, 1.2), "origin": [-30.0, -2.4], "goal": 0, "species": "east"},
         {"formation": grid(5, 10, 1.2), "origin": [19.2, -2.4], "goal": 1, "species": "west"}],
        walls,
        params={"avoidance_mode": mode},
    )


def target_locomotion():
    return doc(
        "target_locomotion",
        "192 agents on a 16x12 grid, spacing 5.5 m, each walking to its own target in a "
        "translated copy of the grid perturbed by uniform noise of +-1 m per axis. "
        "Translation and noise amplitude are reconstructions.",
        int(round(60 * 48)),
        [{"kind": "formation", "formation": grid(16, 12, 5.5), "origin": [20.0, 12.0],
          "assign": "each", "noise": 1.0}],
        [{"formation": grid(16, 12, 5.5), "origin": [0.0, 0.0], "goal": 0}],
        params={"avoidance_mode": "longrange"},
    )


def main():
    docs = [
        passing("sparse_passing", 40, 20, 4.0, 6.0, 1.0, "longrange", 90,
                "Sparse passing, 1,600 agents."),
        passing("sparse_passing_avoidance", 40, 20, 4.0, 6.0, 1.0, "avoidance", 90,
                "Sparse passing with the avoidance model, 1,600 agents."),
        passing("dense_low", 40, 20, 2.5, 5.0, 0.75, "longrange", 90,
                "Dense passing, low count: 1,600 agents at spacing 2.5."),
        passing("dense_low_avoidance", 40, 20, 2.5, 5.0, 0.75, "avoidance", 90,
                "Dense passing, low count, avoidance model."),
        passing("dense_high", 76, 66, 3.5, 6.0, 1.0, "longrange", 240,
                "Dense passing, high count: 10,032 agents at spacing 3.5."),
        passing("dense_high_avoidance", 76, 66, 3.5, 6.0, 1.0, "avoidance", 240,
                "Dense passing, high count, avoidance model."),
        passing("sparse_passing_small", 10, 10, 4.0, 6.0, 1.0, "longrange", 60,
                "Scaled sparse passing, 2x100 agents."),
        passing("dense_passing_small", 20, 20, 2.5, 5.0, 0.75, "avoidance", 90,
                "Scaled dense passing, 2x400 agents at spacing 2.5."),
        bears_and_rabbits(),
        dense_ellipsoid(),
        proximal("longrange"),
        proximal("avoidance"),
        target_locomotion(),
        bottleneck("bottleneck", 24, 20, 1.2, 7.0, 4.0, 300,
                   "Bottleneck, 480 agents."),
        bottleneck("bottleneck_large", 60, 60, 1.2, 12.0, 6.0, 600,
                   "Bottleneck, 3,600 agents."),
    ]
    OUT.mkdir(parents=True, exist_ok=True)
    for d in docs:
        (OUT / f"{d['name']}.json").write_text(json.dumps(d, indent=1) + "\n")
        print(d["name"])


if __name__ == "__main__":
    main()
