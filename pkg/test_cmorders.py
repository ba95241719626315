"""
Tests for CM extensions K_q and their orders.
"""
import pytest

from app.errors import InputError, NotAdmissible
from app.services.cmorders import (
    CMField,
    admissible_q,
    cm_field,
    cyclotomic_trace,
    load_unit_overrides,
    make_order,
    order_lattice,
    unit_index_Q,
    unit_index_max,
)
from app.services.quadfield import Ideal, make_field


@pytest.mark.parametrize("d,expected", [(1, [2, 3]), (5, [2, 3, 5]), (8, [2, 3, 4]), (12, [2, 3, 6]), (13, [2, 3])])
def test_admissible_q(d, expected):
    assert admissible_q(make_field(d)) == expected


def test_inadmissible_q_raises(rationals):
    assert cyclotomic_trace(rationals, 4) is None
    with pytest.raises(NotAdmissible):
        CMField(rationals, 4)


def test_zeta_has_order_2q(rationals, q5):
    i = cm_field(rationals, 2).zeta
    assert i * i == cm_field(rationals, 2).element(-1)
    cm = cm_field(q5, 5)
    power = cm.element(1)
    for _ in range(10):
        power = power * cm.zeta
    assert power == cm.element(1)


def test_cm_sqrt(rationals):
    cm = cm_field(rationals, 2)
    assert cm.element(-1).sqrt() in (cm.zeta, cm.zeta * cm.element(-1))
    assert cm.element(2).sqrt() is None


@pytest.mark.parametrize(
    "d,q,w,disc",
    [(1, 2, 4, -4), (1, 3, 6, -3), (8, 2, 8, 256), (8, 4, 8, 256), (12, 2, 12, 144), (5, 5, 10, 125)],
)
def test_torsion_and_discriminant(d, q, w, disc):
    cm = cm_field(make_field(d), q)
    assert cm.w == w
    assert cm.absolute_discriminant == disc


@pytest.mark.parametrize("d,q", [(5, 2), (5, 3), (5, 5), (8, 2), (8, 3), (12, 6)])
def test_cm_class_numbers_are_one(d, q):
    assert cm_field(make_field(d), q).class_number == 1


def test_hasse_unit_index(q5, q8, q12):
    assert cm_field(q5, 2).hasse_unit_index == 1
    assert cm_field(q8, 4).hasse_unit_index == 1
    cm = cm_field(q12, 2)
    assert cm.hasse_unit_index == 2
    u = cm.extra_unit
    assert u * u in [z * cm.element(q12.fundamental_unit) for z in cm.roots_of_unity]


def test_maximal_generator_of_q_zeta8(q8):
    cm = cm_field(q8, 2)
    (p2,) = q8.split_prime(2)
    assert cm.max_conductor == Ideal.from_mapping({p2: 1})
    assert cm.relative_discriminant == Ideal.from_mapping({p2: 2})
    assert cm.splitting(p2) == 0


def test_order_lattice_filters_torsion(q8):
    (p2,) = q8.split_prime(2)
    orders = order_lattice(q8, 2)
    assert [o.label for o in orders] == ["P2"]
    order = orders[0]
    assert order.w == 4
    assert unit_index_max(order) == 2
    assert unit_index_Q(order) == 1
    assert order.class_number == 1
    assert order.conductor == Ideal.from_mapping({p2: 1})
    assert [o.label for o in order_lattice(q8, 4)] == ["(1)"]


def test_order_membership(q8):
    cm = cm_field(q8, 2)
    (p2,) = q8.split_prime(2)
    order = make_order(cm, Ideal.from_mapping({p2: 1}))
    assert order.contains(cm.element(1))
    assert order.contains(cm.zeta)
    assert sum(1 for z in cm.roots_of_unity if order.contains(z)) == 4
    half_root2 = q8.omega / 2
    zeta8 = cm.element(half_root2, half_root2)
    assert zeta8 * zeta8 == cm.zeta
    assert not order.contains(zeta8)


def test_splitting_over_rationals(rationals):
    cm = cm_field(rationals, 3)
    assert cm.splitting(rationals.split_prime(7)[0]) == 1
    assert cm.splitting(rationals.split_prime(5)[0]) == -1
    assert cm.splitting(rationals.split_prime(3)[0]) == 0
    assert cm.splitting(rationals.split_prime(2)[0]) == -1


def test_unit_overrides(tmp_path, q8):
    path = tmp_path / "overrides.yaml"
    path.write_text("- {d_F: 8, q: 2, conductor: P2, Q: 2, unit_index: 1}\n", encoding="utf-8")
    overrides = load_unit_overrides(path)
    assert overrides[(8, 2, "P2")].q_index == 2
    (p2,) = q8.split_prime(2)
    order = make_order(cm_field(q8, 2), Ideal.from_mapping({p2: 1}), overrides)
    assert order.q_index == 2 and order.unit_index == 1


def test_missing_override_file(tmp_path):
    with pytest.raises(InputError):
        load_unit_overrides(tmp_path / "absent.yaml")
