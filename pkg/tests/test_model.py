import numpy as np
import pytest

from armmorse.core import GestureLabel, NormStats
from armmorse.errors import ConfigError, ModelFormatError, ShapeMismatchError
from armmorse.nn.io import MAGIC, load_model, save_model
from armmorse.nn.model import (
    Conv2d,
    Dense,
    GestureModel,
    MaxPool,
    Network,
    ReLU,
    Softmax,
    activation_rows,
    build_network,
    predict_from_probs,
)

from oracles import count_params


def unit_stats():
    return NormStats(mean=np.zeros(6), std=np.ones(6))


def random_window(seed=0):
    return np.random.default_rng(seed).standard_normal((6, 250))


class TestShapeChain:
    # (channels, rows, timesteps) after each shape-changing stage
    EXPECTED = [
        (12, 6, 240),  # conv1
        (12, 6, 60),  # pool1
        (24, 6, 50),  # conv2
        (24, 6, 25),  # pool2
        (32, 1, 15),  # conv3
        (32,),  # global pool
        (6,),  # dense
    ]

    @pytest.mark.parametrize("variant", ["cnn-max", "cnn-lp"])
    def test_derived_activation_shapes(self, variant):
        net = build_network(variant, seed=0)
        chain = net.shape_chain
        shape_changes = [chain[i] for i in (1, 3, 5, 7, 9, 11, 13)]
        assert shape_changes == self.EXPECTED

    def test_mutated_chain_rejected(self):
        # dense expecting the wrong width must fail the static shape check
        layers = [
            Conv2d(1, 12, 1, 11),
            ReLU(),
            MaxPool(1, 4),
            Dense(32, 6),
            Softmax(),
        ]
        with pytest.raises(ShapeMismatchError):
            Network(layers)

    def test_network_must_end_with_softmax(self):
        with pytest.raises(ShapeMismatchError):
            Network([Dense(250 * 6, 6)], input_shape=(1, 6, 250))


class TestParamCount:
    def test_cnn_max_count(self):
        assert build_network("cnn-max", seed=0).param_count() == 54254

    def test_cnn_lp_count(self):
        assert build_network("cnn-lp", seed=0).param_count() == 56018

    def test_latent_pool_delta(self):
        delta = (
            build_network("cnn-lp", seed=0).param_count()
            - build_network("cnn-max", seed=0).param_count()
        )
        assert delta == 1764

    def test_per_layer_arithmetic_oracle(self):
        # independent count from the published layer shapes
        cnn_max = count_params(
            [
                ((12, 1, 1, 11), 12),
                ((24, 12, 1, 11), 24),
                ((32, 24, 6, 11), 32),
                ((6, 32), 6),
            ]
        )
        assert cnn_max == 54254
        assert cnn_max == 144 + 3192 + 50720 + 198
        cnn_lp = cnn_max + count_params(
            [((12, 12, 1, 4), 12), ((24, 24, 1, 2), 24)]
        )
        assert cnn_lp == 56018

    def test_dense_alone(self):
        dense = Dense(32, 6)
        assert sum(a.size for _, a in dense.param_items()) == 198

    def test_count_matches_oracle_per_layer(self):
        net = build_network("cnn-lp", seed=1)
        oracle = count_params(
            [
                (layer.w.shape, layer.b.size)
                for layer in net.layers
                if layer.has_params
            ]
        )
        assert net.param_count() == oracle


class TestForward:
    @pytest.mark.parametrize("variant", ["cnn-max", "cnn-lp"])
    def test_probabilities_sum_to_one(self, variant):
        net = build_network(variant, seed=3)
        x = np.random.default_rng(0).standard_normal((2, 1, 6, 250))
        probs = net.forward(x)
        assert probs.shape == (2, 6)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_eval_forward_bit_identical(self):
        net = build_network("cnn-lp", seed=4)
        x = np.random.default_rng(1).standard_normal((1, 1, 6, 250))
        assert np.array_equal(net.forward(x), net.forward(x))

    def test_training_forward_needs_rng_for_dropout(self):
        net = build_network("cnn-max", seed=5)
        x = np.zeros((1, 1, 6, 250))
        with pytest.raises(ConfigError):
            net.forward(x, training=True)

    def test_wrong_input_shape_rejected(self):
        net = build_network("cnn-max", seed=5)
        with pytest.raises(ShapeMismatchError):
            net.forward(np.zeros((1, 1, 6, 100)))


class TestPredict:
    def test_plain_argmax(self):
        probs = np.array([0.02, 0.02, 0.02, 0.02, 0.9, 0.02])
        label, conf = predict_from_probs(probs, threshold=0.0)
        assert label is GestureLabel.FIRE
        assert conf == 0.9

    def test_threshold_fallback_to_random(self):
        probs = np.array([0.09, 0.09, 0.09, 0.09, 0.55, 0.09])
        label, conf = predict_from_probs(probs, threshold=0.6)
        assert label is GestureLabel.RANDOM
        assert conf == 0.55

    def test_random_not_subject_to_threshold(self):
        probs = np.array([0.5, 0.1, 0.1, 0.1, 0.1, 0.1])
        label, _ = predict_from_probs(probs, threshold=0.9)
        assert label is GestureLabel.RANDOM

    def test_uniform_ties_pick_smallest_code(self):
        label, conf = predict_from_probs(np.full(6, 1.0 / 6.0), threshold=0.0)
        assert label is GestureLabel.RANDOM  # code 0
        assert np.isclose(conf, 1.0 / 6.0)

    def test_bad_threshold_rejected(self):
        with pytest.raises(ConfigError):
            predict_from_probs(np.full(6, 1.0 / 6.0), threshold=1.0)


class TestActivations:
    def test_identity_conv_layer_zero(self):
        from armmorse.nn.model import GlobalAvgPool

        identity_conv = Conv2d(1, 1, 1, 1)
        identity_conv.w = np.ones((1, 1, 1, 1))  # 1x1 kernel, weight 1, bias 0
        net = Network(
            [identity_conv, GlobalAvgPool(), Dense(1, 6), Softmax()],
            input_shape=(1, 6, 250),
        )
        window = random_window(2)
        rows = activation_rows(net, window[None, None, :, :], 0, sensor_row=3)
        assert np.array_equal(rows[0], window[3])

    def test_conv2_activation_length_50(self):
        net = build_network("cnn-lp", seed=6)
        x = random_window(3)[None, None, :, :]
        rows = activation_rows(net, x, layer_index=4)
        assert rows.shape == (24, 50)

    def test_row_count_equals_channel_count(self):
        net = build_network("cnn-max", seed=7)
        x = random_window(4)[None, None, :, :]
        assert activation_rows(net, x, layer_index=0).shape[0] == 12
        assert activation_rows(net, x, layer_index=8).shape[0] == 32
        assert activation_rows(net, x, layer_index=10).shape == (32, 1)
        assert activation_rows(net, x, layer_index=13).shape == (6, 1)

    def test_layer_index_out_of_range(self):
        net = build_network("cnn-max", seed=7)
        with pytest.raises(ConfigError):
            activation_rows(net, random_window()[None, None], layer_index=99)


class TestModelFile:
    def _model(self, variant="cnn-lp", seed=11):
        return GestureModel(
            network=build_network(variant, seed=seed),
            norm_stats=NormStats(
                mean=np.arange(6.0), std=np.arange(1.0, 7.0)
            ),
            variant=variant,
            init_seed=seed,
            training_summary={"epochs": 0},
        )

    def test_round_trip_predictions_identical(self, tmp_path):
        model = self._model()
        path = tmp_path / "m.bin"
        save_model(model, path)
        back = load_model(path)
        rng = np.random.default_rng(8)
        windows = rng.standard_normal((50, 6, 250)) * 3 + 1
        assert np.array_equal(
            model.predict_batch(windows), back.predict_batch(windows)
        )
        # probabilities close to the 64-bit in-memory values
        for i in range(5):
            x = (windows[i] - model.norm_stats.mean[:, None]) / model.norm_stats.std[
                :, None
            ]
            p_mem = model.network.forward(x[None, None])[0]
            p_back = back.network.forward(x[None, None])[0]
            assert np.max(np.abs(p_mem - p_back)) < 1e-6

    def test_header_fields_survive(self, tmp_path):
        model = self._model("cnn-max", seed=2)
        path = tmp_path / "m.bin"
        save_model(model, path)
        back = load_model(path)
        assert back.variant == "cnn-max"
        assert back.init_seed == 2
        assert back.label_map[4] == "F"
        assert np.array_equal(back.norm_stats.mean, model.norm_stats.mean)
        assert back.training_summary == {"epochs": 0}

    def test_weights_are_f32_rounded(self, tmp_path):
        model = self._model()
        path = tmp_path / "m.bin"
        save_model(model, path)
        back = load_model(path)
        w0 = model.network.layers[0].w
        w0_back = back.network.layers[0].w
        assert np.array_equal(w0_back, w0.astype(np.float32).astype(np.float64))

    def test_unknown_format_version_rejected(self, tmp_path):
        model = self._model()
        path = tmp_path / "m.bin"
        save_model(model, path)
        raw = bytearray(path.read_bytes())
        # bump format_version inside the JSON header
        idx = raw.find(b'"format_version": 1')
        assert idx != -1
        raw[idx : idx + len(b'"format_version": 1')] = b'"format_version": 9'
        path.write_bytes(bytes(raw))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 100)
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_truncated_file_rejected(self, tmp_path):
        model = self._model()
        path = tmp_path / "m.bin"
        save_model(model, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 100])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_magic_constant(self):
        assert MAGIC == b"MRSE1\n"
