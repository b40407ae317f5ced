import json
import random

import pytest

from matmul_r1cs.errors import MalformedAssignment, ModulusMismatch, ParseError, ShapeError, ValidationError
from matmul_r1cs.field import MERSENNE_61
from matmul_r1cs.matmul import Encoding, MatMulSpec, synthesize_matmul
from matmul_r1cs.r1cs import (
    Assignment,
    R1CSInstance,
    SparseMatrix,
    deserialize_assignment,
    deserialize_instance,
    instance_stats,
    is_satisfied,
    serialize_assignment,
    serialize_instance,
)

from .conftest import P97, P251


def make_instance(p, m, l, a_rows, b_rows, c_rows):
    n = len(a_rows)
    mats = [SparseMatrix(n, m, [dict(r) for r in rows]) for rows in (a_rows, b_rows, c_rows)]
    return R1CSInstance(p, *mats, n_constraints=n, n_variables=m, n_public=l)


def shared_witness_instance(p=P97):
    # z = (1, x1, x2, y, w); (x1 + w) * (x2 + w) = y
    return make_instance(p, 5, 3, [{1: 1, 4: 1}], [{2: 1, 4: 1}], [{3: 1}])


def dense_oracle(instance, z):
    """Hadamard check from dense matrices, written from scratch."""
    p, n, m = instance.p, instance.n_constraints, instance.n_variables
    dense = []
    for mat in (instance.a_mat, instance.b_mat, instance.c_mat):
        d = [[0] * m for _ in range(n)]
        for r, c, v in mat.entries():
            d[r][c] = v
        dense.append(d)
    A, B, C = ([sum(row[j] * z[j] for j in range(m)) % p for row in d] for d in dense)
    bad = [i for i in range(n) if A[i] * B[i] % p != C[i]]
    return (not bad), (bad[0] if bad else None)


def random_instance(rng, p, satisfiable=True):
    m = rng.randint(2, 10)
    l = rng.randint(0, m - 1)
    n = rng.randint(0, 32)
    z = [1] + [rng.randrange(1, p.p) for _ in range(m - 1)]

    def rand_row():
        cols = rng.sample(range(m), rng.randint(0, min(m, 3)))
        return {c: rng.randrange(1, p.p) for c in cols}

    a_rows, b_rows, c_rows = [], [], []
    for _ in range(n):
        ra, rb = rand_row(), rand_row()
        prod = sum(v * z[c] for c, v in ra.items()) * sum(v * z[c] for c, v in rb.items()) % p.p
        if satisfiable or rng.random() < 0.9:
            c = rng.randrange(m)
            rc = {c: prod * pow(z[c], -1, p.p) % p.p} if prod else {}
        else:
            rc = rand_row()
        a_rows.append(ra)
        b_rows.append(rb)
        c_rows.append(rc)
    return make_instance(p, m, l, a_rows, b_rows, c_rows), Assignment(z, p)


class TestIsSatisfied:
    def test_identity_row(self):
        inst = make_instance(P97, 2, 0, [{1: 1}], [{1: 1}], [{1: 1}])
        assert is_satisfied(inst, Assignment([1, 1], P97)).ok

    def test_forced_violation(self):
        inst = make_instance(P97, 2, 0, [{1: 1}], [{1: 1}], [{1: 1}])
        assert is_satisfied(inst, Assignment([1, 2], P97)) == (False, 0)

    def test_shared_witness(self):
        assert (1 + 3) * (2 + 3) == 20
        inst = shared_witness_instance()
        assert is_satisfied(inst, Assignment([1, 1, 2, 20, 3], P97)).ok
        for y in (0, 19, 21, 96):
            assert not is_satisfied(inst, Assignment([1, 1, 2, y, 3], P97)).ok

    def test_smallest_failing_row(self):
        rows = [{1: 1}] * 4
        inst = make_instance(P97, 2, 0, rows, rows, [{1: 1}, {0: 5}, {0: 7}, {1: 1}])
        assert is_satisfied(inst, Assignment([1, 1], P97)).failing_row == 1

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            is_satisfied(shared_witness_instance(), Assignment([1, 1, 2, 20], P97))

    def test_malformed(self):
        with pytest.raises(MalformedAssignment):
            Assignment([2, 1, 2, 20, 3], P97)

    def test_modulus_mismatch(self):
        with pytest.raises(ModulusMismatch):
            is_satisfied(shared_witness_instance(), Assignment([1, 1, 2, 20, 3], P251))

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_dense_oracle(self, seed):
        rng = random.Random(seed)
        for i in range(40):
            inst, asg = random_instance(rng, P251 if i % 2 else MERSENNE_61, satisfiable=i % 3 == 0)
            got = is_satisfied(inst, asg)
            assert (got.ok, got.failing_row) == dense_oracle(inst, asg.values)


class TestStats:
    def test_empty(self):
        inst = make_instance(P97, 1, 0, [], [], [])
        st = instance_stats(inst)
        assert (st.n_constraints, st.a_nonzeros, st.b_nonzeros, st.c_nonzeros, st.left_wire_count) == (0,) * 5

    def test_left_wires_naive(self):
        inst = synthesize_matmul(MatMulSpec(1, 3, 1, Encoding.NAIVE)).finalize().instance
        assert instance_stats(inst).left_wire_count == 6

    def test_left_wires_prefix_sums(self):
        inst = synthesize_matmul(MatMulSpec(1, 3, 1, Encoding.NAIVE_PSQ)).finalize().instance
        assert instance_stats(inst).left_wire_count == 3

    def test_counts_match_entries(self):
        rng = random.Random(3)
        for _ in range(20):
            inst, _ = random_instance(rng, P251)
            st = instance_stats(inst)
            assert st.a_nonzeros == len(list(inst.a_mat.entries()))
            assert st.c_nonzeros == len(list(inst.c_mat.entries()))
            assert st.left_wire_count <= st.n_variables - 1


class TestSerialization:
    def test_round_trip(self):
        rng = random.Random(7)
        for _ in range(20):
            inst, asg = random_instance(rng, MERSENNE_61)
            data = serialize_instance(inst)
            back = deserialize_instance(data)
            assert back == inst
            assert serialize_instance(back) == data
            assert deserialize_assignment(serialize_assignment(asg)) == asg

    def test_verdicts_preserved(self):
        rng = random.Random(11)
        for i in range(100):
            inst, asg = random_instance(rng, P251, satisfiable=i % 2 == 0)
            inst2 = deserialize_instance(serialize_instance(inst))
            asg2 = deserialize_assignment(serialize_assignment(asg))
            assert is_satisfied(inst, asg) == is_satisfied(inst2, asg2)

    def test_schema(self):
        doc = json.loads(serialize_instance(shared_witness_instance()))
        assert doc == {
            "modulus": "97",
            "n_constraints": 1,
            "n_variables": 5,
            "n_public": 3,
            "a": [[0, 1, "1"], [0, 4, "1"]],
            "b": [[0, 2, "1"], [0, 4, "1"]],
            "c": [[0, 3, "1"]],
        }

    def _doc(self, **over):
        doc = json.loads(serialize_instance(shared_witness_instance()))
        doc.update(over)
        return json.dumps(doc)

    def test_duplicate_rejected(self):
        with pytest.raises(ValidationError):
            deserialize_instance(self._doc(a=[[0, 1, "1"], [0, 1, "2"]]))

    def test_composite_modulus(self):
        assert 7 * 13 == 91
        with pytest.raises(ValidationError):
            deserialize_instance(self._doc(modulus="91"))

    def test_index_out_of_range(self):
        with pytest.raises(ValidationError):
            deserialize_instance(self._doc(c=[[0, 5, "1"]]))
        with pytest.raises(ValidationError):
            deserialize_instance(self._doc(c=[[1, 0, "1"]]))

    def test_malformed_json_has_location(self):
        with pytest.raises(ParseError) as err:
            deserialize_instance(b'{"modulus": "97",\n "a": [')
        assert "line" in str(err.value)

    def test_wrong_types(self):
        with pytest.raises(ParseError):
            deserialize_instance(self._doc(a=[[0, 1, 1]]))
        with pytest.raises(ParseError):
            deserialize_instance(self._doc(n_constraints="1"))

    def test_assignment_first_entry(self):
        with pytest.raises(ValidationError):
            deserialize_assignment(b'{"modulus": "97", "z": ["2", "3"]}')

    def test_assignment_too_short(self):
        asg = deserialize_assignment(b'{"modulus": "97", "z": ["1", "1", "2", "20"]}')
        with pytest.raises(ShapeError):
            is_satisfied(shared_witness_instance(), asg)
