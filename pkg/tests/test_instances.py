import dataclasses
import itertools
import math

import pytest

from rblab.errors import ParameterError, ParseError
from rblab.instances import (
    Constraint,
    decode_tuple,
    encode_tuple,
    export_cnf_direct,
    generate,
    generate_forced,
    parse,
    serialize,
    validate,
)
from rblab.thresholds import ModelParams, derive_sizes

REF_PARAMS = ModelParams(n=9, alpha=0.5, k=2, p=2.0 / 9.0, r=10.0 / (9.0 * math.log(3.0)))


def test_encode_decode_roundtrip():
    for d, k in [(3, 2), (5, 3), (2, 4)]:
        for vals in itertools.product(range(d), repeat=k):
            code = encode_tuple(vals, d)
            assert 0 <= code < d**k
            assert decode_tuple(code, d, k) == vals
    # first scope position is the most significant digit
    assert encode_tuple((1, 0), 3) == 3
    assert encode_tuple((0, 1), 3) == 1


def test_generation_is_deterministic():
    a = generate(REF_PARAMS, seed=42)
    b = generate(REF_PARAMS, seed=42)
    assert a == b
    assert serialize(a) == serialize(b)
    c = generate(REF_PARAMS, seed=43)
    assert a != c


def test_generated_structure_is_valid():
    for seed in range(20):
        inst = generate(REF_PARAMS, seed=seed)
        assert validate(inst, REF_PARAMS) == []
        sizes = derive_sizes(REF_PARAMS)
        assert inst.t == sizes.t
        assert inst.d == sizes.d
        for con in inst.constraints:
            assert len(con.scope) == inst.k
            assert all(a < b for a, b in zip(con.scope, con.scope[1:]))
            assert len(con.nogoods) == inst.q
            assert len(set(con.nogoods)) == inst.q
            assert all(0 <= c < inst.d**inst.k for c in con.nogoods)


def test_every_scope_eventually_appears():
    # n=4, k=2 has 6 possible scopes; across many constraints each shows up
    params = ModelParams(n=4, alpha=0.5, k=2, p=0.25, r=2.0)
    seen = set()
    for seed in range(200):
        for con in generate(params, seed=seed).constraints:
            seen.add(con.scope)
    assert seen == {tuple(s) for s in itertools.combinations(range(4), 2)}


def test_forced_instances_respect_hidden():
    params = ModelParams(n=8, alpha=0.5, k=2, p=0.3, r=1.2)
    for seed in range(50):
        inst, hidden = generate_forced(params, seed=seed)
        assert inst.forced
        assert inst.hidden == hidden
        assert validate(inst, params) == []
        for con in inst.constraints:
            code = encode_tuple((hidden[v] for v in con.scope), inst.d)
            assert code not in con.nogoods


def test_forced_generation_with_tiny_domain():
    # d = 2, k = 2: q = 2 of the 3 codes left after excluding the hidden
    # projection, which drives the complement path of the code sampler
    params = ModelParams(n=6, alpha=0.38, k=2, p=0.55, r=1.0)
    sizes = derive_sizes(params)
    assert sizes.d == 2 and sizes.q == 2
    for seed in range(30):
        inst, hidden = generate_forced(params, seed=seed)
        assert validate(inst, params) == []


def test_serialize_parse_roundtrip():
    inst = generate(REF_PARAMS, seed=0xDEADBEEF)
    text = serialize(inst)
    back = parse(text)
    assert back == inst
    assert back.seed == 0xDEADBEEF
    assert serialize(back) == text

    finst, hidden = generate_forced(REF_PARAMS, seed=7)
    ftext = serialize(finst)
    fback = parse(ftext)
    assert fback == finst
    assert fback.hidden == hidden


def test_parse_rejects_malformed_input():
    good = serialize(generate(REF_PARAMS, seed=1))
    lines = good.splitlines()

    with pytest.raises(ParseError):
        parse("")
    with pytest.raises(ParseError):
        parse("rb 1 9 3 2 10\n")  # short header
    with pytest.raises(ParseError):
        parse(good.replace("rb 1", "rb 2", 1))  # unknown version
    with pytest.raises(ParseError):
        parse(good.replace(" 1 0\n", " zz 0\n", 1))  # non-hex seed
    with pytest.raises(ParseError):
        parse("\n".join(lines[:-1]) + "\n")  # one x line missing
    with pytest.raises(ParseError):
        parse(good + "junk\n")  # trailing content

    # scope not strictly increasing
    bad = good.replace(lines[1], "c 5 5", 1)
    with pytest.raises(ParseError):
        parse(bad)

    # value outside the domain
    bad = good.replace(lines[2], "x 0 9", 1)
    with pytest.raises(ParseError):
        parse(bad)


def test_parse_reports_line_numbers():
    good = serialize(generate(REF_PARAMS, seed=1))
    lines = good.splitlines()
    # duplicate the first forbidden tuple inside constraint 0
    lines[3] = lines[2]
    with pytest.raises(ParseError) as err:
        parse("\n".join(lines) + "\n")
    assert "constraint 0" in str(err.value)
    assert err.value.line == 4

    with pytest.raises(ParseError) as err:
        parse("rb 1 9 3 2 10\n")
    assert err.value.line == 1


def test_parse_requires_hidden_line_for_forced():
    finst, _ = generate_forced(REF_PARAMS, seed=3)
    text = serialize(finst)
    without = "\n".join(text.splitlines()[:-1]) + "\n"
    with pytest.raises(ParseError) as err:
        parse(without)
    assert "'s' line" in str(err.value)


def _read_dimacs(text):
    lines = text.splitlines()
    header = lines[0].split()
    assert header[:2] == ["p", "cnf"]
    nvars, nclauses = int(header[2]), int(header[3])
    clauses = []
    for line in lines[1:]:
        toks = [int(x) for x in line.split()]
        assert toks[-1] == 0
        clauses.append(toks[:-1])
    assert len(clauses) == nclauses
    assert all(1 <= abs(lit) <= nvars for cl in clauses for lit in cl)
    return nvars, clauses


def _cnf_holds(clauses, true_vars):
    return all(
        any((lit > 0) == (abs(lit) in true_vars) for lit in cl) for cl in clauses
    )


def test_export_cnf_direct_matches_instance():
    params = ModelParams(n=3, alpha=0.65, k=2, p=0.3, r=1.5)
    inst = generate(params, seed=11)
    assert inst.d == 2
    nvars, clauses = _read_dimacs(export_cnf_direct(inst))
    assert nvars == inst.n * inst.d

    # boolean image of each total assignment satisfies the CNF exactly
    # when the assignment satisfies every constraint
    for assignment in itertools.product(range(inst.d), repeat=inst.n):
        true_vars = {1 + v * inst.d + a for v, a in enumerate(assignment)}
        ok = all(
            encode_tuple((assignment[v] for v in con.scope), inst.d)
            not in con.nogoods
            for con in inst.constraints
        )
        assert _cnf_holds(clauses, true_vars) == ok


def test_validate_flags_corruption():
    inst = generate(REF_PARAMS, seed=5)
    assert validate(inst) == []

    bad_scope = dataclasses.replace(
        inst,
        constraints=(
            dataclasses.replace(inst.constraints[0], scope=(2, 1)),
        ) + inst.constraints[1:],
    )
    msgs = validate(bad_scope)
    assert any("strictly increasing" in m for m in msgs)

    bad_code = dataclasses.replace(
        inst,
        constraints=(
            dataclasses.replace(inst.constraints[0], nogoods=(0, 99)),
        ) + inst.constraints[1:],
    )
    msgs = validate(bad_code)
    assert any("out of range" in m for m in msgs)

    wrong_q = dataclasses.replace(inst, q=inst.q + 1)
    msgs = validate(wrong_q, REF_PARAMS)
    assert any("expected q" in m for m in msgs)
    assert any("does not match derived" in m for m in msgs)


def test_validate_catches_hidden_violation():
    params = ModelParams(n=8, alpha=0.5, k=2, p=0.3, r=1.2)
    inst, hidden = generate_forced(params, seed=1)
    # corrupt constraint 0 so its nogoods are exactly {hidden projection}
    con = inst.constraints[0]
    hit = encode_tuple((hidden[v] for v in con.scope), inst.d)
    corrupted = dataclasses.replace(
        inst,
        constraints=(
            dataclasses.replace(con, nogoods=tuple(sorted({hit, 0, 1}))),
        ) + inst.constraints[1:],
    )
    assert hit in corrupted.constraints[0].nogoods
    msgs = validate(corrupted, None)
    assert any("hits a forbidden tuple" in m for m in msgs)


def test_seed_validation():
    with pytest.raises(ParameterError):
        generate(REF_PARAMS, seed=-1)
    with pytest.raises(ParameterError):
        generate(REF_PARAMS, seed=True)
    with pytest.raises(ParameterError):
        generate_forced(REF_PARAMS, seed=-3)


def test_nogood_values_decoding():
    inst = generate(REF_PARAMS, seed=2)
    con = inst.constraints[0]
    decoded = con.nogood_values(inst.d)
    assert len(decoded) == len(con.nogoods)
    for code, vals in zip(con.nogoods, decoded):
        assert encode_tuple(vals, inst.d) == code
