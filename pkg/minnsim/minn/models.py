from dataclasses import dataclass, field

from ..errors import ConfigError
from ..wave import SimStack
from .layers import ConvLayer, dense_stack

POWER_MODES = ("hard_norm", "soft_penalty")


@dataclass
class EncoderParams:
    """TX network: optional conv front end, then dense layers ending in 2 * n_tx * T reals."""

    convs: list
    dense: list
    input_shape: tuple
    n_tx: int
    time_slots: int = 1
    activation: str = "relu"
    pool: str = "max"

    def __post_init__(self):
        self.input_shape = tuple(self.input_shape)
        out = self.dense[-1].shape[1]
        if out != 2 * self.n_tx * self.time_slots:
            raise ConfigError(
                f"encoder emits {out} reals, expected 2 * n_tx * T = {2 * self.n_tx * self.time_slots}"
            )

    @classmethod
    def init(cls, input_shape, n_tx, rng, time_slots=1, conv_channels=(8, 16), kernel=5,
             hidden=(), activation="relu", pool="max"):
        input_shape = tuple(input_shape)
        convs = []
        if len(input_shape) == 2 and conv_channels:
            h, w = input_shape
            c_in = 1
            for i, c_out in enumerate(conv_channels):
                convs.append(ConvLayer.init(c_in, c_out, kernel, rng, name=f"encoder.conv{i}"))
                h, w = (h - kernel + 1) // 2, (w - kernel + 1) // 2
                if h < 1 or w < 1:
                    raise ConfigError(f"input {input_shape} too small for {len(conv_channels)} conv stages")
                c_in = c_out
            flat = c_in * h * w
        else:
            flat = 1
            for d in input_shape:
                flat *= d
        sizes = [flat, *hidden, 2 * n_tx * time_slots]
        return cls(convs, dense_stack(sizes, rng, "encoder.dense"), input_shape, n_tx, time_slots, activation, pool)

    def parameters(self):
        return [p for layer in [*self.convs, *self.dense] for p in layer.parameters()]


@dataclass
class DecoderParams:
    """RX network: dense layers from stacked real/imag received samples to class logits."""

    dense: list
    n_rx: int
    n_classes: int
    time_slots: int = 1
    activation: str = "relu"

    def __post_init__(self):
        n_in, n_out = self.dense[0].shape[0], self.dense[-1].shape[1]
        if n_in != 2 * self.n_rx * self.time_slots:
            raise ConfigError(f"decoder takes {n_in} reals, expected {2 * self.n_rx * self.time_slots}")
        if n_out != self.n_classes:
            raise ConfigError(f"decoder emits {n_out} logits for {self.n_classes} classes")

    @classmethod
    def init(cls, n_rx, n_classes, rng, time_slots=1, hidden=(128, 64), activation="relu"):
        sizes = [2 * n_rx * time_slots, *hidden, n_classes]
        return cls(dense_stack(sizes, rng, "decoder.dense"), n_rx, n_classes, time_slots, activation)

    def parameters(self):
        return [p for layer in self.dense for p in layer.parameters()]


@dataclass
class ControllerParams:
    """Maps a flattened channel observation to every SIM phase vector."""

    dense: list
    layer_sizes: list
    activation: str = "relu"

    def __post_init__(self):
        if self.dense[-1].shape[1] != sum(self.layer_sizes):
            raise ConfigError(
                f"controller emits {self.dense[-1].shape[1]} phases, SIM has {sum(self.layer_sizes)}"
            )

    @staticmethod
    def observation_size(cfg, stack):
        size = stack.first.count * cfg.n_tx + cfg.n_rx * stack.last.count
        if cfg.include_direct_path:
            size += cfg.n_rx * cfg.n_tx
        return 2 * size

    @property
    def obs_dim(self):
        return self.dense[0].shape[0]

    @classmethod
    def init(cls, obs_dim, layer_sizes, rng, hidden=(64,), activation="relu"):
        sizes = [obs_dim, *hidden, sum(layer_sizes)]
        return cls(dense_stack(sizes, rng, "controller.dense"), list(layer_sizes), activation)

    def parameters(self):
        return [p for layer in self.dense for p in layer.parameters()]


@dataclass
class MinnModel:
    """Encoder -> programmable channel -> Decoder.

    link: "sim" (SIM cascade, optional direct path), "no_sim" (only the
    uncontrollable fading channel) or "digital" (identity channel, the
    all-digital reference).
    """

    encoder: EncoderParams
    decoder: DecoderParams
    channel_cfg: object
    stack: SimStack = None
    power_mode: str = "hard_norm"
    p_max: float = 1.0
    controller: ControllerParams = None
    link: str = "sim"
    meta: dict = field(default_factory=dict)
    needs_channel = True

    def __post_init__(self):
        if self.power_mode not in POWER_MODES:
            raise ConfigError(f"unknown power mode {self.power_mode!r}; expected one of {POWER_MODES}")
        if self.p_max <= 0:
            raise ConfigError(f"p_max must be positive, got {self.p_max}")
        cfg = self.channel_cfg
        if self.encoder.n_tx != cfg.n_tx or self.decoder.n_rx != cfg.n_rx:
            raise ConfigError(
                f"encoder/decoder built for {self.encoder.n_tx}x{self.decoder.n_rx},"
                f" channel is {cfg.n_tx}x{cfg.n_rx}"
            )
        if self.link == "sim" and self.stack is None:
            raise ConfigError("a SIM link needs a SimStack")
        if self.link != "sim" and self.controller is not None:
            raise ConfigError("a phase controller needs a SIM link")
        if self.controller is not None and self.controller.layer_sizes != self.stack.layer_sizes:
            raise ConfigError("controller layer sizes do not match the SIM stack")

    @property
    def time_slots(self):
        return self.encoder.time_slots

    def parameters(self):
        params = self.encoder.parameters()
        if self.link == "sim":
            params += self.controller.parameters() if self.controller is not None else self.stack.parameters()
        return params + self.decoder.parameters()

    def named_parameters(self):
        return [(p.name or f"param{i}", p) for i, p in enumerate(self.parameters())]

    def effective_channel(self, realization):
        from .forward import effective_channel

        return effective_channel(self, realization)

    def forward(self, x, realization, rng=None):
        from .forward import minn_forward

        return minn_forward(x, self, realization, rng, return_signal=True)
