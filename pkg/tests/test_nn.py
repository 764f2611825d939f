import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphsim import nn
from graphsim.errors import DataError, DetachedTensor, NotScalar, ShapeMismatch
from graphsim.nn import Tape, Tensor


def param(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def weighted(x, rng):
    # random linear read-out, so every output cell gets a distinct cotangent
    w = rng.normal(size=x.shape)
    return nn.tensor_sum(nn.mul(x, w))


# -- forward examples --------------------------------------------------------

def test_matmul_examples():
    x = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(nn.matmul(np.eye(2), x).data, x)
    assert nn.matmul([[1.0, 2.0]], [[3.0], [4.0]]).data.tolist() == [[11.0]]
    with pytest.raises(ShapeMismatch):
        nn.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_relu_examples():
    assert nn.relu([-1.0, 0.0, 2.0]).data.tolist() == [0.0, 0.0, 2.0]
    x = np.array([0.5, 3.0])
    assert np.array_equal(nn.relu(x).data, x)


def test_conv_identity_kernel():
    x = np.random.default_rng(0).normal(size=(1, 5, 5))
    out = nn.conv2d(x, np.ones((1, 1, 1, 1)), np.zeros(1))
    assert np.allclose(out.data, x)


def test_conv_zero_input_gives_bias():
    out = nn.conv2d(np.zeros((2, 4, 4)), np.ones((3, 2, 3, 3)), np.array([1.0, -2.0, 0.5]))
    assert out.shape == (3, 4, 4)
    assert np.allclose(out.data[0], 1.0) and np.allclose(out.data[1], -2.0) and np.allclose(out.data[2], 0.5)


def naive_conv(x, w, b, stride):
    c, h, wd = x.shape
    o, _, k, _ = w.shape
    ho, wo = -(-h // stride), -(-wd // stride)
    total_h = max((ho - 1) * stride + k - h, 0)
    total_w = max((wo - 1) * stride + k - wd, 0)
    xp = np.pad(x, ((0, 0), (total_h // 2, total_h - total_h // 2), (total_w // 2, total_w - total_w // 2)))
    out = np.zeros((o, ho, wo))
    for oc in range(o):
        for i in range(ho):
            for j in range(wo):
                patch = xp[:, i * stride : i * stride + k, j * stride : j * stride + k]
                out[oc, i, j] = (patch * w[oc]).sum() + b[oc]
    return out


@pytest.mark.parametrize("k, stride, size", [(3, 1, 5), (6, 1, 10), (5, 2, 7), (2, 3, 8), (4, 1, 1)])
def test_conv_matches_loop_reference(k, stride, size):
    rng = np.random.default_rng(k * 10 + stride)
    x, w, b = rng.normal(size=(2, size, size)), rng.normal(size=(3, 2, k, k)), rng.normal(size=3)
    assert np.allclose(nn.conv2d(x, w, b, stride).data, naive_conv(x, w, b, stride))
    batched = nn.conv2d(np.stack([x, 2 * x]), w, b, stride).data
    assert np.allclose(batched[1], naive_conv(2 * x, w, b, stride))


def test_conv_same_padding_keeps_size():
    out = nn.conv2d(np.zeros((1, 10, 10)), np.zeros((16, 1, 6, 6)), np.zeros(16))
    assert out.shape == (16, 10, 10)


def test_conv_shape_errors():
    with pytest.raises(ShapeMismatch):
        nn.conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)), np.zeros(1))
    with pytest.raises(ShapeMismatch):
        nn.conv2d(np.zeros((1, 4, 4)), np.zeros((2, 1, 3, 3)), np.zeros(3))


def test_maxpool_examples():
    assert nn.maxpool2d(np.array([[[1.0, 2.0], [3.0, 4.0]]]), 2).data.tolist() == [[[4.0]]]
    assert np.allclose(nn.maxpool2d(np.full((2, 5, 5), 3.0), 2).data, 3.0)


def test_maxpool_ceil_and_ragged_edges():
    x = np.arange(25.0).reshape(1, 5, 5)
    out = nn.maxpool2d(x, 2).data
    assert out.shape == (1, 3, 3)
    assert out[0].tolist() == [[6, 8, 9], [16, 18, 19], [21, 23, 24]]


def test_maxpool_gradient_is_one_hot_at_argmax():
    x = Tensor(np.random.default_rng(1).permutation(16).astype(float).reshape(1, 4, 4), requires_grad=True)
    with Tape() as tape:
        loss = nn.tensor_sum(nn.maxpool2d(x, 2))
    g = nn.backward(tape, loss, [x])[x]
    expected = np.zeros_like(x.data)
    for i in range(2):
        for j in range(2):
            win = x.data[0, 2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
            a, b = np.unravel_index(win.argmax(), win.shape)
            expected[0, 2 * i + a, 2 * j + b] = 1
    assert np.array_equal(g, expected)


def test_spatial_trace_through_default_stack():
    sizes = [10]
    x = np.zeros((1, 10, 10))
    for k, c_in, c_out, pool in [(6, 1, 16, 2), (6, 16, 32, 2), (5, 32, 64, 2), (5, 64, 128, 3), (5, 128, 128, 3)]:
        x = nn.conv2d(x, np.zeros((c_out, c_in, k, k)), np.zeros(c_out)).data
        sizes.append(x.shape[-1])
        x = nn.maxpool2d(x, pool).data
        sizes.append(x.shape[-1])
    assert sizes == [10, 10, 5, 5, 3, 3, 2, 2, 1, 1, 1]


def test_resize_examples():
    x = np.random.default_rng(2).normal(size=(4, 4))
    assert np.allclose(nn.bilinear_resize(x, 4).data, x)
    assert np.allclose(nn.bilinear_resize(np.full((3, 3), 2.5), 7).data, 2.5)
    assert nn.bilinear_resize(np.array([[0.0, 1.0], [1.0, 0.0]]), 3).data[1, 1] == pytest.approx(0.5)


def test_resize_corners_preserved():
    x = np.random.default_rng(3).normal(size=(5, 5))
    out = nn.bilinear_resize(x, 10).data
    assert out[0, 0] == pytest.approx(x[0, 0]) and out[-1, -1] == pytest.approx(x[-1, -1])
    assert out[0, -1] == pytest.approx(x[0, -1])


def naive_bilinear(x, m):
    n = x.shape[0]
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            si = i * (n - 1) / (m - 1) if m > 1 else 0.0
            sj = j * (n - 1) / (m - 1) if m > 1 else 0.0
            i0, j0 = int(np.floor(si)), int(np.floor(sj))
            i1, j1 = min(i0 + 1, n - 1), min(j0 + 1, n - 1)
            di, dj = si - i0, sj - j0
            out[i, j] = (
                x[i0, j0] * (1 - di) * (1 - dj)
                + x[i1, j0] * di * (1 - dj)
                + x[i0, j1] * (1 - di) * dj
                + x[i1, j1] * di * dj
            )
    return out


@settings(max_examples=30)
@given(st.integers(2, 9), st.integers(2, 12), st.integers(0, 1000))
def test_resize_matches_pointwise_reference(n, m, seed):
    x = np.random.default_rng(seed).normal(size=(n, n))
    assert np.allclose(nn.bilinear_resize(x, m).data, naive_bilinear(x, m))


def test_resize_single_cell_broadcasts():
    assert np.allclose(nn.bilinear_resize(np.array([[1.5]]), 4).data, 1.5)


def test_mse_examples():
    assert nn.mse_loss([0.2, 0.4], [0.2, 0.4]).item() == 0.0
    assert nn.mse_loss([0.0], [1.0]).item() == 1.0
    with pytest.raises(ShapeMismatch):
        nn.mse_loss([0.0, 1.0], [1.0])


def test_mse_gradient_formula():
    pred = Tensor(np.array([0.1, 0.7, 0.3]), requires_grad=True)
    target = np.array([0.5, 0.5, 0.5])
    with Tape() as tape:
        loss = nn.mse_loss(pred, target)
    g = nn.backward(tape, loss, [pred])[pred]
    assert np.allclose(g, 2 * (pred.data - target) / 3)


# -- gradients ---------------------------------------------------------------

MSE_TARGET = np.random.default_rng(99).normal(size=5)

OP_CASES = {
    "add": lambda p: nn.add(p(3, 4), p(4)),
    "sub": lambda p: nn.sub(p(3, 1), p(3, 4)),
    "mul": lambda p: nn.mul(p(2, 3, 4), p(3, 1)),
    "matmul": lambda p: nn.matmul(p(3, 4), p(4, 2)),
    "matmul_batched": lambda p: nn.matmul(p(2, 3, 4), p(4, 5)),
    "transpose": lambda p: nn.transpose(p(2, 3, 4)),
    "reshape": lambda p: nn.reshape(p(2, 6), (3, 4)),
    "sigmoid": lambda p: nn.sigmoid(p(3, 3)),
    "mean": lambda p: nn.mean(p(4, 3), axis=0),
    "sum_axis": lambda p: nn.tensor_sum(p(2, 3, 4), axis=-1),
    "concat": lambda p: nn.concat([p(2, 3), p(2, 5)], axis=1),
    "conv_s1": lambda p: nn.conv2d(p(2, 6, 6), p(3, 2, 3, 3), p(3)),
    "conv_k6": lambda p: nn.conv2d(p(1, 10, 10), p(4, 1, 6, 6), p(4)),
    "conv_s2_batched": lambda p: nn.conv2d(p(2, 2, 7, 7), p(3, 2, 4, 4), p(3), stride=2),
    "maxpool2": lambda p: nn.maxpool2d(p(2, 5, 5), 2),
    "maxpool3": lambda p: nn.maxpool2d(p(1, 2, 4, 4), 3),
    "resize": lambda p: nn.bilinear_resize(p(4, 4), 10),
    "resize_down": lambda p: nn.bilinear_resize(p(2, 7, 7), 3),
    "mse": lambda p: nn.mse_loss(p(5), MSE_TARGET),
}


@pytest.mark.parametrize("name", sorted(OP_CASES))
def test_op_gradients(name):
    rng = np.random.default_rng(sum(map(ord, name)))
    builder = OP_CASES[name]
    leaves = []

    def create(*shape):
        leaves.append(param(rng, *shape))
        return leaves[-1]

    readout = rng.normal(size=builder(create).shape)

    def fn():
        it = iter(leaves)
        return nn.tensor_sum(nn.mul(builder(lambda *shape: next(it)), readout))

    assert nn.grad_check(fn, leaves) < 1e-5


def test_relu_gradient_off_kink():
    rng = np.random.default_rng(4)
    x = Tensor(rng.choice([-1, 1], size=(4, 5)) * rng.uniform(0.1, 1.0, size=(4, 5)), requires_grad=True)
    with Tape() as tape:
        loss = nn.tensor_sum(nn.relu(x))
    g = nn.backward(tape, loss, [x])[x]
    assert np.array_equal(g, (x.data > 0).astype(float))
    assert nn.grad_check(lambda: nn.tensor_sum(nn.relu(x)), [x]) < 1e-5


def test_backward_examples():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    v = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        loss = nn.tensor_sum(w)
    grads = nn.backward(tape, loss, [w, v])
    assert np.array_equal(grads[w], np.ones((2, 2)))
    assert np.array_equal(grads[v], np.zeros(3))


def test_backward_accumulates_reused_tensors():
    x = Tensor(np.array([2.0, -3.0]), requires_grad=True)
    with Tape() as tape:
        loss = nn.tensor_sum(nn.mul(x, x))
    assert np.allclose(nn.backward(tape, loss, [x])[x], 2 * x.data)


def test_backward_errors():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        out = nn.mul(w, 2.0)
    with pytest.raises(NotScalar):
        nn.backward(tape, out, [w])
    with Tape() as other:
        pass
    with Tape() as tape:
        loss = nn.tensor_sum(w)
    with pytest.raises(DetachedTensor):
        nn.backward(other, loss, [w])


def test_no_recording_without_tape():
    w = Tensor(np.ones(2), requires_grad=True)
    out = nn.tensor_sum(w)
    assert not out.requires_grad


def test_grad_check_simple_functions():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 4))
    q = a @ a.T
    x = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
    quad = lambda: nn.tensor_sum(nn.matmul(nn.transpose(x), nn.matmul(q, x)))
    assert nn.grad_check(quad, [x]) < 1e-6
    c = rng.normal(size=(4, 1))
    lin = lambda: nn.tensor_sum(nn.mul(x, c))
    assert nn.grad_check(lin, [x]) < 1e-8


def test_grad_check_detects_wrong_gradient():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)

    def wrong():
        # forward uses x**2 but records the vjp of x
        from graphsim.nn.tensor import make_output

        return nn.tensor_sum(make_output(x.data**2, (x,), lambda g: (g,)))

    assert nn.grad_check(wrong, [x]) > 0.1


def test_grad_check_rejects_bad_eps():
    x = Tensor(np.ones(1), requires_grad=True)
    with pytest.raises(ValueError):
        nn.grad_check(lambda: nn.tensor_sum(x), [x], eps=0)


def test_relative_error_floor():
    assert nn.relative_error(0.0, 1e-9) == 0.0
    assert nn.relative_error(1.0, 1.1) == pytest.approx(0.1 / 1.1)


# -- Adam --------------------------------------------------------------------

def test_adam_zero_gradient():
    w = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    state = nn.AdamState()
    nn.adam_step([w], [np.zeros(2)], state)
    assert w.data.tolist() == [1.0, -2.0] and state.t == 1


def test_adam_first_step_is_signed_lr():
    w = Tensor(np.array([0.0, 0.0, 0.0]), requires_grad=True)
    state = nn.AdamState(lr=0.01)
    nn.adam_step([w], [np.array([3.0, -0.002, 40.0])], state)
    assert np.allclose(w.data, [-0.01, 0.01, -0.01], atol=1e-8)


def test_adam_minimizes_quadratic():
    w = Tensor(np.array([0.0]), requires_grad=True)
    opt = nn.Adam([w], lr=0.1)
    for _ in range(100):
        with Tape() as tape:
            loss = nn.tensor_sum(nn.mul(nn.sub(w, 3.0), nn.sub(w, 3.0)))
        opt.step(nn.backward(tape, loss, [w]))
    assert abs(w.data[0] - 3.0) < 0.5


def test_adam_shape_mismatch():
    w = Tensor(np.zeros(2), requires_grad=True)
    with pytest.raises(ShapeMismatch):
        nn.adam_step([w], [np.zeros(3)], nn.AdamState())


# -- checkpoints and determinism -----------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    params = {"a": rng.normal(size=(2, 3)).astype(np.float32), "b": rng.normal(size=4)}
    nn.save_params(tmp_path / "p.json", params)
    back = nn.load_params(tmp_path / "p.json")
    assert set(back) == {"a", "b"}
    for k in params:
        assert back[k].dtype == params[k].dtype
        assert np.array_equal(back[k], params[k])


def test_checkpoint_rejects_bad_files(tmp_path):
    (tmp_path / "x.json").write_text("nope")
    with pytest.raises(DataError):
        nn.load_params(tmp_path / "x.json")
    (tmp_path / "y.json").write_text('{"format": "other", "version": 1, "params": {}}')
    with pytest.raises(DataError):
        nn.load_params(tmp_path / "y.json")


def test_forward_is_bit_deterministic():
    rng = np.random.default_rng(8)
    x, w, b = rng.normal(size=(1, 10, 10)), rng.normal(size=(4, 1, 6, 6)), rng.normal(size=4)
    first = nn.maxpool2d(nn.relu(nn.conv2d(x, w, b)), 2).data
    second = nn.maxpool2d(nn.relu(nn.conv2d(x, w, b)), 2).data
    assert first.tobytes() == second.tobytes()


def test_scalar_constants_keep_float32():
    x = Tensor(np.ones(3, dtype=np.float32))
    assert nn.mul(2.0, x).dtype == np.float32
    assert nn.sub(1.0, x).dtype == np.float32
