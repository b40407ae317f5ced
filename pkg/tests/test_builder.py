import pytest

from matmul_r1cs.builder import PRIVATE, PUBLIC, CircuitBuilder, LinearCombination, lc_eval
from matmul_r1cs.errors import StateError, UnknownVariable
from matmul_r1cs.field import FieldElement
from matmul_r1cs.matmul import Encoding, MatMulSpec, synthesize_matmul
from matmul_r1cs.r1cs import instance_stats, is_satisfied, serialize_assignment, serialize_instance

from .conftest import P97


def test_alloc_distinct():
    cb = CircuitBuilder(P97)
    vs = [cb.alloc(PUBLIC if i % 3 else PRIVATE) for i in range(50)]
    assert len({v.index for v in vs}) == 50


def test_alloc_after_finalize():
    cb = CircuitBuilder(P97)
    cb.private()
    cb.finalize()
    with pytest.raises(StateError):
        cb.private()
    with pytest.raises(StateError):
        cb.finalize()


def test_public_count_and_layout():
    cb = CircuitBuilder(P97)
    privs, pubs = [], []
    for i in range(15):
        # interleave to exercise column reordering
        (pubs if i % 3 != 2 else privs).append(cb.public() if i % 3 != 2 else cb.private())
    syn = cb.finalize()
    assert syn.instance.n_public == 10
    assert [syn.layout[v] for v in pubs] == list(range(1, 11))
    assert [syn.layout[v] for v in privs] == list(range(11, 16))


def test_constant_rows():
    cb = CircuitBuilder(P97)
    cb.enforce(1, 1, 1)
    syn = cb.finalize()
    assert is_satisfied(syn.instance, syn.assignment).ok

    cb = CircuitBuilder(P97)
    x = cb.private(value=0)
    cb.enforce(0, x, 1)
    assert not is_satisfied(*cb.finalize()[::2]).ok
    for v in range(97):
        cb2 = CircuitBuilder(P97)
        x = cb2.private(value=v)
        cb2.enforce(0, x, 1)
        syn = cb2.finalize()
        assert not is_satisfied(syn.instance, syn.assignment).ok


def test_foreign_variable():
    a, b = CircuitBuilder(P97), CircuitBuilder(P97)
    x = a.private()
    b.private()
    with pytest.raises(UnknownVariable):
        b.enforce(x, 1, x)
    y = b.private()
    with pytest.raises(UnknownVariable):
        x + y


def test_lc_product_rejected():
    cb = CircuitBuilder(P97)
    x, y = cb.private(), cb.private()
    with pytest.raises(TypeError):
        (x + 1) * (y + 1)


def test_empty_finalize():
    syn = CircuitBuilder(P97).finalize()
    assert syn.instance.n_variables == 1
    assert syn.instance.n_constraints == 0
    assert syn.assignment.values == (1,)


def test_shared_witness_circuit():
    cb = CircuitBuilder(P97)
    x1, x2, y = cb.public(value=1), cb.public(value=2), cb.public(value=20)
    w = cb.private(value=3)
    cb.enforce(x1 + w, x2 + w, y)
    syn = cb.finalize()
    assert syn.assignment.values == (1, 1, 2, 20, 3)
    assert is_satisfied(syn.instance, syn.assignment).ok
    st = instance_stats(syn.instance)
    assert (st.a_nonzeros, st.b_nonzeros, st.c_nonzeros) == (2, 2, 1)


def test_missing_value_no_assignment():
    cb = CircuitBuilder(P97)
    x = cb.private(value=2)
    y = cb.private()
    cb.enforce(x, x, y)
    syn = cb.finalize()
    assert syn.assignment is None
    assert syn.instance.n_constraints == 1


def test_lc_eval():
    cb = CircuitBuilder(P97)
    x, y = cb.private(value=4), cb.private(value=5)
    syn = cb.finalize()
    got = lc_eval(2 * x + 3 * y + 1, syn.assignment, syn.layout)
    assert got == FieldElement(24, P97)
    assert lc_eval(x - y, syn.assignment, syn.layout).value == 96


def test_lc_algebra():
    cb = CircuitBuilder(P97)
    x = cb.private(value=10)
    lc = 3 * x - x - 2 * x + 5
    assert isinstance(lc, LinearCombination)
    assert lc.is_constant() and lc.constant == 5
    assert cb.value(-x + 100) == 90


def test_rows_match_lcs():
    syn_circ = synthesize_matmul(MatMulSpec(2, 3, 2, Encoding.CRPC, challenge=7))
    cb = syn_circ.builder
    syn = syn_circ.finalize()
    for i, (la, lb, lc) in enumerate(cb.constraints):
        for lin, mat in ((la, syn.instance.a_mat), (lb, syn.instance.b_mat), (lc, syn.instance.c_mat)):
            exp = {syn.layout[k]: v for k, v in lin.terms.items()}
            if lin.constant:
                exp[0] = lin.constant
            assert mat.rows[i] == exp


@pytest.mark.parametrize("enc", list(Encoding))
def test_deterministic_synthesis(enc):
    outs = set()
    for _ in range(3):
        X = [[1, 2, 3], [4, 5, 6]]
        W = [[1, 0], [0, 1], [2, 2]]
        syn = synthesize_matmul(MatMulSpec(2, 3, 2, enc, challenge=11), X, W).finalize()
        outs.add(serialize_instance(syn.instance) + serialize_assignment(syn.assignment))
    assert len(outs) == 1
