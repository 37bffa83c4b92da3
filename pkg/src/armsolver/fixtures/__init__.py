"""Bundled robot fixtures: ten small arms given as ETS plus a plain-language
description of each, generated from the chain itself."""
from __future__ import annotations

from importlib import resources

from ..ets import BUILTIN_ETS, ETS, parse_ets
from ..symexpr import to_text

FIG4_COUNT = 10

# Numeric link lengths used wherever a fixture must be evaluated.
FIG4_CONSTANTS = {"L1": 0.5, "L2": 0.4, "L3": 0.3, "L4": 0.2}


def _read(name: str) -> str:
    return resources.files(__name__).joinpath("fig4", name).read_text(encoding="utf-8")


def fig4_text(k: int) -> str:
    if not 1 <= k <= FIG4_COUNT:
        raise ValueError(f"fixture index must be 1..{FIG4_COUNT}")
    return _read(f"robot{k}.txt").strip()


def fig4_ets_text(k: int) -> str:
    if not 1 <= k <= FIG4_COUNT:
        raise ValueError(f"fixture index must be 1..{FIG4_COUNT}")
    return _read(f"robot{k}.ets").strip()


def fig4_ets(k: int) -> ETS:
    return parse_ets(fig4_ets_text(k))


def all_fixture_ets() -> dict[str, str]:
    """The twelve fixture chains by name: robot1..robot10, panda, ur3."""
    out = {f"robot{k}": fig4_ets_text(k) for k in range(1, FIG4_COUNT + 1)}
    out.update(BUILTIN_ETS)
    return out


def fixture_constants(ets: ETS) -> dict[str, float]:
    return {k: v for k, v in FIG4_CONSTANTS.items() if k in ets.constant_symbols()}


_ORDINAL = {1: "first", 2: "second", 3: "third", 4: "fourth", 5: "fifth", 6: "sixth",
            7: "seventh", 8: "eighth", 9: "ninth", 10: "tenth"}


def describe_chain(ets: ETS | str) -> str:
    """Plain-language walk along a chain from base to tool.

    Every joint sentence contains "revolute joint" or "prismatic joint", so a
    generated description is recognisable as a structural one.
    """
    if isinstance(ets, str):
        ets = parse_ets(ets)
    sentences = [f"The arm is a serial chain with {ets.n} joints, listed from the base outward."]
    k = 0
    for et in ets:
        axis = f"the local {et.axis.upper()} axis"
        if et.is_joint:
            k += 1
            sense = " in the negative sense" if et.flip else ""
            if et.rotation:
                sentences.append(f"Joint {k} is a revolute joint turning about {axis}{sense}.")
            else:
                sentences.append(f"Joint {k} is a prismatic joint sliding along {axis}{sense}.")
        elif et.rotation:
            sentences.append(f"A fixed rotation of {to_text(et.value)} rad about {axis} comes next.")
        else:
            sentences.append(f"A fixed offset of {to_text(et.value)} along {axis} comes next.")
    sentences.append("The tool frame sits at the end of the last element.")
    return " ".join(sentences)
