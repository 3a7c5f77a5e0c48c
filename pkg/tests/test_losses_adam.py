import numpy as np
import pytest

from ccgan.gan.adam import Adam
from ccgan.gan.layers import Param
from ccgan.gan.losses import (
    accuracy,
    hinge_d,
    hinge_g,
    losses,
    softmax_cross_entropy,
)


class TestHinge:
    def test_saturated_d_loss_is_zero(self):
        real = np.array([1.0, 2.5, 7.0])
        fake = np.array([-1.0, -3.0])
        loss, d_real, d_fake = hinge_d(real, fake)
        assert loss == 0.0
        assert np.all(d_real == 0.0)
        assert np.all(d_fake == 0.0)

    def test_active_region_grads(self):
        real = np.array([0.0, 2.0])
        fake = np.array([0.0, -2.0])
        loss, d_real, d_fake = hinge_d(real, fake)
        assert loss == pytest.approx(0.5 + 0.5)
        assert np.allclose(d_real, [-0.5, 0.0])
        assert np.allclose(d_fake, [0.5, 0.0])

    def test_generator_loss_linear(self):
        fake = np.array([3.0, -1.0])
        loss, grad = hinge_g(fake)
        assert loss == pytest.approx(-1.0)
        assert np.allclose(grad, [-0.5, -0.5])


class TestCrossEntropy:
    def test_perfect_logits_vanish(self):
        logits = np.array([[1e6, 0.0, 0.0], [0.0, 1e6, 0.0]])
        y = np.array([0, 1])
        loss, grad = softmax_cross_entropy(logits, y)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(grad, 0.0)

    def test_uniform_logits(self):
        logits = np.zeros((4, 5))
        y = np.array([0, 1, 2, 3])
        loss, _ = softmax_cross_entropy(logits, y)
        assert loss == pytest.approx(np.log(5.0))

    def test_accuracy(self):
        logits = np.array([[2.0, 1.0], [0.0, 3.0], [5.0, 0.0]])
        assert accuracy(logits, np.array([0, 1, 1])) == pytest.approx(2 / 3)


class TestLossesOp:
    def test_combined_values(self):
        real = np.array([2.0])
        fake = np.array([-2.0])
        good = np.array([[50.0, 0.0]])
        y = np.array([0])
        l_d, l_g = losses(real, fake, good, good, y, lambda_ac=1.0)
        assert l_d == pytest.approx(0.0, abs=1e-12)
        assert l_g == pytest.approx(2.0, abs=1e-12)  # -mean(fake) = 2, ce = 0

    def test_ac_fake_flag(self):
        real = np.array([2.0])
        fake = np.array([-2.0])
        bad = np.array([[0.0, 0.0]])
        y = np.array([0])
        with_fake, _ = losses(real, fake, bad, bad, y, ac_fake_in_d=True)
        without, _ = losses(real, fake, bad, bad, y, ac_fake_in_d=False)
        assert with_fake == pytest.approx(2 * np.log(2.0))
        assert without == pytest.approx(np.log(2.0))


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        p = Param("w", np.array([1.0, -2.0]))
        opt = Adam({"w": p}, lr=0.1)
        before = p.value.copy()
        opt.step()
        assert np.array_equal(p.value, before)

    def test_single_step_hand_value(self):
        # scalar g=0.5, lr=0.1, betas (0.9, 0.999), eps 1e-8:
        # mhat = 0.5, vhat = 0.25 -> delta = -0.1 * 0.5 / (0.5 + 1e-8)
        p = Param("w", np.array([0.0]))
        p.grad[:] = 0.5
        opt = Adam({"w": p}, lr=0.1, beta1=0.9, beta2=0.999)
        opt.step()
        assert p.value[0] == pytest.approx(-0.09999999800, abs=1e-10)

    def test_groups_independent(self):
        a = Param("a", np.zeros(2))
        b = Param("b", np.zeros(3))
        a.grad[:] = 1.0
        opt = Adam({"a": a, "b": b}, lr=0.01)
        opt.step()
        assert np.all(a.value != 0.0)
        assert np.all(b.value == 0.0)

    def test_state_roundtrip(self):
        p = Param("w", np.zeros(2))
        opt = Adam({"w": p}, lr=0.05)
        for _ in range(3):
            p.grad[:] = 1.0
            opt.step()
        q = Param("w", p.value.copy())
        opt2 = Adam({"w": q}, lr=0.05)
        opt2.load_state({"t": opt.t, "m": opt.m, "v": opt.v})
        p.grad[:] = 0.5
        q.grad[:] = 0.5
        opt.step()
        opt2.step()
        assert np.allclose(p.value, q.value)
