import pytest
from hypothesis import given
from hypothesis import strategies as st

from armsolver.ets import (
    BUILTIN_ETS, PRISMATIC, REVOLUTE, EtsSyntaxError, InvalidRobotIdError, RobotRegistry,
    UnknownModelError, builtin_model, format_ets, parse_ets,
)
from armsolver.fixtures import FIG4_COUNT, all_fixture_ets, describe_chain, fig4_ets, fig4_text


def test_parse_basic_chain():
    ets = parse_ets("Rz(q1) tx(L1) Ry(-q2) tx(L2) Ry(-q3)")
    assert len(ets) == 5
    assert ets.n == 3
    assert ets.joint_kinds == [REVOLUTE] * 3
    assert [et.flip for et in ets.joints] == [False, True, True]
    assert ets.constant_symbols() == {"L1", "L2"}


def test_joint_renumbering_by_appearance():
    ets = parse_ets("Ry(-q1) tz(L1) tx(d2) Ry(q3) tx(L3)")
    assert [et.joint for et in ets.joints] == [0, 1, 2]
    assert ets.joint_kinds == [REVOLUTE, PRISMATIC, REVOLUTE]
    assert [et.joint_symbol for et in ets.joints] == ["theta1", "d2", "theta3"]


def test_theta_spelling_and_numeric_constants():
    ets = parse_ets("tz(0.333) Rz(theta1) Rx(pi) tz( 0.107 )")
    assert ets.n == 1
    assert format_ets(ets) == "tz(0.333) Rz(theta1) Rx(pi) tz(0.107)"


def test_same_structure_ignores_spelling():
    a = parse_ets("Rz(q1) tx(L1) Rz(q2)")
    b = parse_ets("Rz(theta4) tx(L1) Rz(theta7)")
    assert a.same_structure(b)
    assert not a.same_structure(parse_ets("Rz(q1) tx(L1) Rz(-q2)"))


@pytest.mark.parametrize("bad", [
    "", "Rz(q1", "Rw(q1)", "Rz()", "Rz(d1)", "tx(q1)", "Rz(q1) Rz(q1)", "tx(L1 + q2)", "Rz(q1) foo",
])
def test_syntax_errors(bad):
    with pytest.raises(EtsSyntaxError):
        parse_ets(bad)


def test_syntax_error_position():
    with pytest.raises(EtsSyntaxError) as info:
        parse_ets("Rz(q1) tx(L1) Qz(q2)")
    assert info.value.position == 2


_et = st.one_of(
    st.builds(lambda a, s: f"R{a}({s}q{{j}})", st.sampled_from("xyz"), st.sampled_from(["", "-"])),
    st.builds(lambda a: f"t{a}(d{{j}})", st.sampled_from("xyz")),
    st.builds(lambda a, c: f"t{a}({c})", st.sampled_from("xyz"), st.sampled_from(["L1", "0.5", "-0.25", "L2"])),
    st.builds(lambda a, c: f"R{a}({c})", st.sampled_from("xyz"), st.sampled_from(["pi", "0.5*pi", "-0.1"])),
)


@given(st.lists(_et, min_size=1, max_size=10))
def test_format_parse_round_trip(items):
    text = " ".join(t.format(j=i + 1) for i, t in enumerate(items))
    ets = parse_ets(text)
    again = parse_ets(format_ets(ets))
    assert again == ets
    assert ets.n == sum("{j}" in t for t in items)


def test_registry_ids_and_lookup():
    reg = RobotRegistry(seed=7)
    rid = reg.register("arm", parse_ets("Rz(q1) tx(L1)"), {"L1": 1.0})
    assert len(rid) == 36 and rid.count("-") == 4
    model = reg.get(rid)
    assert model.name == "arm" and model.n == 1 and not model.builtin
    with pytest.raises(InvalidRobotIdError) as info:
        reg.get("arm")
    assert str(info.value) == "Invalid robot ID"


def test_registry_seed_reproducible():
    a, b = RobotRegistry(3), RobotRegistry(3)
    assert [a.register_builtin("panda"), a.register_builtin("ur3")] == [
        b.register_builtin("panda"), b.register_builtin("ur3")]
    assert RobotRegistry(4).register_builtin("panda") != RobotRegistry(3).register_builtin("panda")


def test_builtins_and_named_configs():
    panda = builtin_model("panda")
    ur3 = builtin_model("UR3")
    assert panda.n == 7 and ur3.n == 6 and panda.builtin
    assert panda.config("qz").tolist() == [0.0] * 7
    assert panda.config("qr").shape == (7,)
    with pytest.raises(KeyError):
        panda.config("qx")
    with pytest.raises(ValueError):
        panda.config([0.0, 1.0])
    with pytest.raises(UnknownModelError):
        builtin_model("frankie")


def test_fixture_chains_parse():
    chains = all_fixture_ets()
    assert len(chains) == FIG4_COUNT + len(BUILTIN_ETS)
    for text in chains.values():
        assert parse_ets(text).n >= 1


def test_fixture_descriptions_are_generated_from_chains():
    for k in range(1, FIG4_COUNT + 1):
        assert fig4_text(k) == describe_chain(fig4_ets(k))


def test_describe_chain_mentions_every_joint():
    text = describe_chain("Ry(-q1) tz(L1) tx(d2)")
    assert "Joint 1 is a revolute joint" in text and "negative sense" in text
    assert "Joint 2 is a prismatic joint" in text
    assert "offset of L1 along the local Z axis" in text
