from fractions import Fraction

import pytest
from gmpy2 import mpfr
from hypothesis import given, settings, strategies as st

from qzeta import DomainError, QContext
from qzeta.indexalg import (
    IndexedWord,
    WordSum,
    blocks,
    pair,
    parse_affine,
    parse_word,
    partitions,
    shift_expand,
    stuffle,
)
from qzeta.series import AffineR

Q = QContext.make("0.3", 128)
TOL = mpfr(2) ** -100

directions = st.tuples(st.integers(0, 3), st.integers(0, 2)).filter(any).map(lambda ab: AffineR(*ab))


@st.composite
def words(draw, max_depth=3):
    d = draw(st.integers(0, max_depth))
    s = draw(st.lists(st.integers(-3, 3), min_size=d, max_size=d))
    r = draw(st.lists(directions, min_size=d, max_size=d))
    return IndexedWord(tuple(s), tuple(r))


def agree(x: dict, y: dict) -> bool:
    keys = set(x) | set(y)
    return all(abs(x.get(k, 0) - y.get(k, 0)) <= TOL for k in keys)


def stuffle_sum(ws: WordSum, w: IndexedWord, left: bool) -> WordSum:
    out = WordSum()
    for t in ws:
        prod = stuffle(t.word, w, Q) if left else stuffle(w, t.word, Q)
        out = out + prod.scale(t.coeff)
    return out


def test_pair():
    p = pair((2, AffineR(1)), (-1, AffineR(0, 1)), Q)
    (t0, t1) = p.terms
    assert t0.word.s == (1,) and t0.coeff == 1 and t0.stuffing == (0,)
    assert t1.word.s == (0,) and t1.stuffing == (1,)
    assert abs(t1.coeff - mpfr("0.7", 128)) < TOL
    assert t0.word.r == (AffineR(1, 1),) == t1.word.r


class TestStuffle:
    def test_unit(self):
        w = IndexedWord.of((1, 2))
        for prod in (stuffle(w, IndexedWord(), Q), stuffle(IndexedWord(), w, Q)):
            assert [t.word for t in prod] == [w]

    def test_term_counts(self):
        a, b, c = (IndexedWord.of((x,)) for x in (1, 2, 3))
        assert len(stuffle(a, b, Q)) == 4
        assert len(stuffle(a, b + c, Q)) == 7

    def test_depth_one_example(self):
        got = stuffle(IndexedWord.of((1,)), IndexedWord.of((2,)), Q).collect()
        two = AffineR(2).key()
        one = AffineR(1).key()
        assert got[((1, 2), (one, one))] == 1
        assert got[((2, 1), (one, one))] == 1
        assert got[((3,), (two,))] == 1
        assert abs(got[((2,), (two,))] - mpfr("0.7", 128)) < TOL

    @given(words(), words())
    def test_commutative(self, u, v):
        assert agree(stuffle(u, v, Q).collect(), stuffle(v, u, Q).collect())

    @settings(max_examples=40)
    @given(words(2), words(2), words(2))
    def test_associative(self, u, v, w):
        left = stuffle_sum(stuffle(u, v, Q), w, True)
        right = stuffle_sum(stuffle(v, w, Q), u, False)
        assert agree(left.collect(), right.collect())

    @given(words(), words())
    def test_term_bookkeeping(self, u, v):
        total_s = sum(u.s) + sum(v.s)
        total_r = sum((x.a for x in u.r + v.r), Fraction(0)), sum((x.b for x in u.r + v.r), Fraction(0))
        with Q.local():
            w = Q.one_minus_q
            for t in stuffle(u, v, Q):
                bits = sum(t.stuffing)
                # a bit flags the (1-q) half of a merged letter, so it never exceeds the merges
                assert max(u.depth, v.depth) <= t.word.depth <= u.depth + v.depth - bits
                assert sum(t.word.s) == total_s - bits
                assert (sum(x.a for x in t.word.r), sum(x.b for x in t.word.r)) == total_r
                assert abs(t.coeff - w ** bits) <= TOL


class TestShiftExpand:
    def test_rows(self):
        w = IndexedWord.of((0, -1))
        terms = shift_expand(w, 2, 2, Q).terms
        assert [t.word.s for t in terms] == [(0, -1), (0, -2), (0, -3)]
        want = [1, mpfr("1.4", 128), mpfr("0.49", 128)]
        assert all(abs(t.coeff - c) < TOL for t, c in zip(terms, want))

    def test_zero_shift(self):
        w = IndexedWord.of((-2,))
        assert [t.word for t in shift_expand(w, 1, 0, Q)] == [w]

    def test_domain(self):
        w = IndexedWord.of((0, 0))
        with pytest.raises(DomainError):
            shift_expand(w, 3, 1, Q)
        with pytest.raises(DomainError):
            shift_expand(w, 1, -1, Q)


class TestPartitions:
    @pytest.mark.parametrize("d", range(1, 7))
    def test_count(self, d):
        cuts = partitions(d)
        assert len(cuts) == 2 ** (d - 1) == len(set(cuts))
        assert all(c[-1] == d and list(c) == sorted(set(c)) for c in cuts)

    def test_small(self):
        assert sorted(partitions(3)) == [(1, 2, 3), (1, 3), (2, 3), (3,)]
        with pytest.raises(DomainError):
            partitions(0)

    def test_blocks(self):
        w = IndexedWord.of((-1, -2, -3, -4))
        assert [b.s for b in blocks(w, (1, 4))] == [(-1,), (-2, -3, -4)]
        for cut in partitions(4):
            assert sum((b for b in blocks(w, cut)), IndexedWord()) == w


class TestParse:
    def test_plain(self):
        w = parse_word("-1,0,-2")
        assert w.s == (-1, 0, -2) and w.r == (AffineR(1),) * 3

    def test_with_directions(self):
        w = parse_word("(-1,-2);1+d, 2d")
        assert w.s == (-1, -2)
        assert w.r == (AffineR(1, 1), AffineR(0, 2))

    def test_affine(self):
        assert parse_affine("1/2+3/4d") == AffineR(Fraction(1, 2), Fraction(3, 4))
        assert parse_affine("d") == AffineR(0, 1)
        assert parse_affine("2*d") == AffineR(0, 2)
        with pytest.raises(DomainError):
            parse_affine("1+2")

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            parse_word("1,2;1")

    def test_classification(self):
        assert parse_word("0,-1").is_nonpositive()
        assert parse_word("2,1").is_positive()
        assert parse_word("1,-1").is_mixed()
        assert not IndexedWord().is_mixed()
